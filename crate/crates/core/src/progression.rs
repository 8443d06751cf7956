//! Points, hints, badges and the Early→Late stage machine.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenge::{ChallengeKind, Verdict};
use crate::state::PlayerState;
use crate::time::Timestamp;

pub const STANDARD_REWARD: u32 = 10;
pub const RECOGNITION_REWARD: u32 = 15;
pub const RECALL_REWARD: u32 = 20;
pub const EARLY_HINT_COST: u32 = 30;
pub const LATE_HINT_COST: u32 = 50;

/// Longest recognition history kept for the skill window.
pub const MAX_SKILL_WINDOW: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgressionError {
    #[error("hint costs {cost} points, balance is {balance}")]
    InsufficientPoints { balance: u32, cost: u32 },
    #[error("hint already granted for challenge `{0}`")]
    DuplicateGrant(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Stage {
    #[default]
    Early,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HintKind {
    VerbalCues,
    LetterReveal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintGrant {
    pub challenge_id: String,
    /// 30 or 50 for purchases; 0 for the free stuck-player letter.
    pub cost: u32,
    pub granted_at: Timestamp,
    pub kind: HintKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BadgeKind {
    Smiley,
    Cake,
    Trophy,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Badge {
    pub kind: BadgeKind,
    pub date: NaiveDate,
    pub awarded_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScoreReason {
    Answer { kind: ChallengeKind, correct: bool },
    Hint { hint: HintKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreEvent {
    pub challenge_id: String,
    pub reason: ScoreReason,
    pub delta: i64,
    pub balance_after: u32,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProgressionConfig {
    pub days_threshold: usize,
    pub skill_threshold: f64,
    pub skill_window: usize,
    /// Avatar challenges per day. Zero disables avatar rounds entirely.
    pub daily_quota: u32,
    /// IANA timezone assigned to new players.
    pub timezone: String,
}

impl Default for ProgressionConfig {
    fn default() -> Self {
        ProgressionConfig {
            days_threshold: 7,
            skill_threshold: 0.8,
            skill_window: 20,
            daily_quota: 6,
            timezone: "UTC".into(),
        }
    }
}

impl ProgressionConfig {
    pub fn validate(&self) -> Result<(), ProgressionError> {
        if self.days_threshold == 0 {
            return Err(ProgressionError::InvalidConfig("days_threshold must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.skill_threshold) {
            return Err(ProgressionError::InvalidConfig("skill_threshold outside [0, 1]".into()));
        }
        if self.skill_window == 0 || self.skill_window > MAX_SKILL_WINDOW {
            return Err(ProgressionError::InvalidConfig(format!(
                "skill_window must be in 1..={MAX_SKILL_WINDOW}"
            )));
        }
        if crate::time::parse_tz(&self.timezone).is_none() {
            return Err(ProgressionError::InvalidConfig(format!("unknown timezone `{}`", self.timezone)));
        }
        Ok(())
    }
}

pub fn reward(kind: ChallengeKind) -> u32 {
    match kind {
        ChallengeKind::Standard => STANDARD_REWARD,
        ChallengeKind::AvatarRecognition => RECOGNITION_REWARD,
        ChallengeKind::AvatarRecall => RECALL_REWARD,
    }
}

pub fn hint_cost(stage: Stage) -> u32 {
    match stage {
        Stage::Early => EARLY_HINT_COST,
        Stage::Late => LATE_HINT_COST,
    }
}

/// Score a judged answer and update the daily counters, recognition history,
/// per-field rehearsal ledger and open-challenge bookkeeping.
///
/// Wrong answers deduct the reward magnitude, floored so the balance stays ≥ 0.
pub fn apply_verdict(
    state: &mut PlayerState,
    challenge_id: &str,
    field_id: Option<&str>,
    verdict: &Verdict,
    now: Timestamp,
) -> ScoreEvent {
    let score = score_for(state.balance, challenge_id, verdict, now);
    state.balance = score.balance_after;

    let today = now.local_date(state.tz());
    state.days_played.insert(today);
    state.last_played = Some(state.last_played.map_or(now, |t| t.max(now)));

    if verdict.kind.is_avatar() {
        let tally = state.daily.entry(today).or_default();
        tally.avatar_total += 1;
        if verdict.correct {
            tally.avatar_solved += 1;
        }
        if verdict.kind == ChallengeKind::AvatarRecognition {
            state.recognition_history.push(verdict.correct);
            let excess = state.recognition_history.len().saturating_sub(MAX_SKILL_WINDOW);
            state.recognition_history.drain(..excess);
        }
        if let Some(field) = field_id {
            let ledger = state.ledger.entry(field.to_string()).or_default();
            if verdict.correct {
                ledger.successes.push(now);
            } else {
                ledger.failures.push(now);
            }
        }
    }

    if let Some(open) = state.open_challenges.get_mut(challenge_id) {
        if verdict.correct {
            state.open_challenges.remove(challenge_id);
        } else {
            open.failed_attempts += 1;
        }
    }

    score
}

/// The score change a verdict causes at `balance`. Pure.
pub fn score_for(balance: u32, challenge_id: &str, verdict: &Verdict, now: Timestamp) -> ScoreEvent {
    let magnitude = reward(verdict.kind);
    let after = if verdict.correct { balance + magnitude } else { balance.saturating_sub(magnitude) };
    ScoreEvent {
        challenge_id: challenge_id.to_string(),
        reason: ScoreReason::Answer { kind: verdict.kind, correct: verdict.correct },
        delta: i64::from(after) - i64::from(balance),
        balance_after: after,
        timestamp: now,
    }
}

/// Buy a hint at the current stage's price.
pub fn purchase_hint(
    state: &mut PlayerState,
    challenge_id: &str,
    kind: HintKind,
    now: Timestamp,
) -> Result<(HintGrant, ScoreEvent), ProgressionError> {
    if state.grants.iter().any(|g| g.challenge_id == challenge_id && g.kind == kind && g.cost > 0) {
        return Err(ProgressionError::DuplicateGrant(challenge_id.to_string()));
    }
    let cost = hint_cost(state.stage);
    if state.balance < cost {
        return Err(ProgressionError::InsufficientPoints { balance: state.balance, cost });
    }
    state.balance -= cost;
    let grant = HintGrant { challenge_id: challenge_id.to_string(), cost, granted_at: now, kind };
    state.grants.push(grant.clone());
    let event = ScoreEvent {
        challenge_id: challenge_id.to_string(),
        reason: ScoreReason::Hint { hint: kind },
        delta: -i64::from(cost),
        balance_after: state.balance,
        timestamp: now,
    };
    Ok((grant, event))
}

/// Badge thresholds for a daily quota: smiley at 1, cake at ceil(q/2), trophy at q.
pub fn badge_thresholds(daily_quota: u32) -> [(BadgeKind, u32); 3] {
    [
        (BadgeKind::Smiley, 1),
        (BadgeKind::Cake, daily_quota.div_ceil(2)),
        (BadgeKind::Trophy, daily_quota),
    ]
}

/// Badges earned today but not yet awarded. Pure.
pub fn badges_due(state: &PlayerState, daily_quota: u32, now: Timestamp) -> Vec<Badge> {
    if daily_quota == 0 {
        return Vec::new();
    }
    let today = now.local_date(state.tz());
    let solved = state.daily.get(&today).map_or(0, |t| t.avatar_solved);
    badge_thresholds(daily_quota)
        .into_iter()
        .filter(|(kind, threshold)| solved >= *threshold && !state.has_badge(*kind, today))
        .map(|(kind, _)| Badge { kind, date: today, awarded_at: now })
        .collect()
}

/// Award any badges now due; each kind at most once per local calendar day.
pub fn award_badges(state: &mut PlayerState, daily_quota: u32, now: Timestamp) -> Vec<Badge> {
    let due = badges_due(state, daily_quota, now);
    state.badges.extend(due.iter().cloned());
    due
}

/// Windowed accuracy over the last `window` recognition answers, if enough are recorded.
pub fn recognition_accuracy(history: &[bool], window: usize) -> Option<f64> {
    if window == 0 || history.len() < window {
        return None;
    }
    let recent = &history[history.len() - window..];
    Some(recent.iter().filter(|c| **c).count() as f64 / window as f64)
}

/// Stage from its inputs; once Late, always Late.
pub fn stage_from(current: Stage, distinct_days: usize, recognition_history: &[bool], config: &ProgressionConfig) -> Stage {
    if current == Stage::Late || distinct_days >= config.days_threshold {
        return Stage::Late;
    }
    match recognition_accuracy(recognition_history, config.skill_window) {
        Some(acc) if acc >= config.skill_threshold => Stage::Late,
        _ => Stage::Early,
    }
}

pub fn evaluate_stage(state: &PlayerState, config: &ProgressionConfig, _now: Timestamp) -> Stage {
    stage_from(state.stage, state.days_played.len(), &state.recognition_history, config)
}
