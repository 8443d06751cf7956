//! Session planning and nudges.
//!
//! A session interleaves avatar rounds among standard puzzles. Avatar fields
//! are taken least-recently-rehearsed first, and the recognition/recall split
//! follows the player's stage, apportioned by largest remainder.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avatar::{AvatarProfile, AvatarSchema};
use crate::challenge::{
    build_avatar_challenge, build_standard_challenge, AvatarMode, Challenge, ChallengeBank, ChallengeConfig,
    ChallengeError, Verdict,
};
use crate::config::GameConfig;
use crate::progression::{apply_verdict, award_badges, evaluate_stage, Badge, HintGrant, HintKind, ScoreEvent, Stage};
use crate::rng::{derive_seed, SeededStream};
use crate::state::{OpenChallenge, PlayerState, SessionRecord};
use crate::time::{Timestamp, DAY_MS};

/// Failed attempts after which an open challenge counts as stuck.
pub const STUCK_FAILED_ATTEMPTS: u32 = 3;

pub const REMINDER_MESSAGE: &str = "reminder.daily";
pub const STUCK_HINT_MESSAGE: &str = "hint.stuck";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("challenge bank is empty")]
    EmptyBank,
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("outcome does not match any remaining plan item: {0}")]
    OutcomeMismatch(String),
    #[error("bank entry `{0}` not found")]
    UnknownEntry(String),
    #[error(transparent)]
    Challenge(#[from] ChallengeError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub session_length: usize,
    pub early_recognition_fraction: f64,
    pub late_recognition_fraction: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { session_length: 10, early_recognition_fraction: 0.8, late_recognition_fraction: 0.2 }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.session_length == 0 {
            return Err("session_length must be ≥ 1".into());
        }
        for f in [self.early_recognition_fraction, self.late_recognition_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(format!("recognition fraction {f} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn recognition_fraction(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Early => self.early_recognition_fraction,
            Stage::Late => self.late_recognition_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChallengeDescriptor {
    Standard { entry_id: String },
    Avatar { field_id: String, mode: AvatarMode },
}

impl ChallengeDescriptor {
    pub fn field_id(&self) -> Option<&str> {
        match self {
            ChallengeDescriptor::Avatar { field_id, .. } => Some(field_id),
            ChallengeDescriptor::Standard { .. } => None,
        }
    }

    pub fn is_avatar(&self) -> bool {
        matches!(self, ChallengeDescriptor::Avatar { .. })
    }

    pub fn mode(&self) -> Option<AvatarMode> {
        match self {
            ChallengeDescriptor::Avatar { mode, .. } => Some(*mode),
            ChallengeDescriptor::Standard { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub session_id: String,
    pub player_id: String,
    pub created_at: Timestamp,
    pub seed: u64,
    pub items: Vec<ChallengeDescriptor>,
    pub avatar_count: usize,
    pub recognition_fraction: f64,
}

// Plans carry a configured fraction that is always finite.
impl Eq for SessionPlan {}

impl SessionPlan {
    pub fn recognition_count(&self) -> usize {
        self.items.iter().filter(|i| i.mode() == Some(AvatarMode::Recognition)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NotificationKind {
    Reminder,
    StuckHintOffer { challenge_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub kind: NotificationKind,
    pub player_id: String,
    pub due_at: Timestamp,
    pub payload: String,
}

/// Split `n` seats between recognition (`fraction · n`) and recall by largest
/// remainder. Returns `(recognition, recall)`; a tied remainder goes to recognition.
pub fn largest_remainder(fraction: f64, n: usize) -> (usize, usize) {
    let round9 = |x: f64| (x * 1e9).round() / 1e9;
    let rec_quota = round9(fraction * n as f64);
    let recall_quota = round9((1.0 - fraction) * n as f64);
    let mut rec = rec_quota.floor() as usize;
    let mut recall = recall_quota.floor() as usize;
    let mut left = n.saturating_sub(rec + recall);
    let (rec_rem, recall_rem) = (rec_quota - rec_quota.floor(), recall_quota - recall_quota.floor());
    let mut order = [(rec_rem, 0u8), (recall_rem, 1u8)];
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, which) in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if *which == 0 {
            rec += 1;
        } else {
            recall += 1;
        }
        left -= 1;
    }
    (rec, recall)
}

/// Evenly spaced slots for `avatar` items in a session of `total` items.
pub fn interleave_positions(avatar: usize, total: usize) -> Vec<usize> {
    assert!(avatar <= total);
    (0..avatar).map(|i| (2 * i + 1) * total / (2 * avatar)).collect()
}

/// Fields in rehearsal priority order: least recently rehearsed, then fewest
/// rehearsals, then schema order.
pub fn rehearsal_order(state: &PlayerState, schema: &AvatarSchema) -> Vec<String> {
    let mut keyed: Vec<_> = schema
        .fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let ledger = state.ledger.get(&f.field_id);
            let last = ledger.and_then(|l| l.last_rehearsed());
            let count = ledger.map_or(0, |l| l.rehearsals());
            ((last, count, i), f.field_id.clone())
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, id)| id).collect()
}

pub fn next_session_plan(
    state: &PlayerState,
    schema: &AvatarSchema,
    bank: &ChallengeBank,
    config: &GameConfig,
    now: Timestamp,
    seed: u64,
) -> Result<SessionPlan, SchedulerError> {
    config.scheduler.validate().map_err(SchedulerError::InvalidConfig)?;
    let length = config.scheduler.session_length;
    let stage = evaluate_stage(state, &config.progression, now);
    let fraction = config.scheduler.recognition_fraction(stage);

    let solved_today = state.solved_on(now.local_date(state.tz()));
    let remaining = config.progression.daily_quota.saturating_sub(solved_today) as usize;
    let avatar_count = if schema.fields.is_empty() { 0 } else { remaining.min(length) };

    let order = rehearsal_order(state, schema);
    let fields: Vec<String> = order.iter().cycle().take(avatar_count).cloned().collect();
    let (recognition, recall) = largest_remainder(fraction, avatar_count);
    let mut modes: Vec<AvatarMode> = std::iter::repeat_n(AvatarMode::Recognition, recognition)
        .chain(std::iter::repeat_n(AvatarMode::Recall, recall))
        .collect();
    let mut stream = SeededStream::new(seed, &format!("session/{}", state.player_id));
    stream.shuffle(&mut modes);

    let standard_count = length - avatar_count;
    let standard: Vec<ChallengeDescriptor> = if standard_count == 0 {
        Vec::new()
    } else {
        if bank.entries.is_empty() {
            return Err(SchedulerError::EmptyBank);
        }
        let n = bank.entries.len();
        let mut picks = stream.sample_indices(n, standard_count.min(n));
        while picks.len() < standard_count {
            picks.push(stream.index(n));
        }
        picks
            .into_iter()
            .map(|i| ChallengeDescriptor::Standard { entry_id: bank.entries[i].entry_id.clone() })
            .collect()
    };

    let slots = interleave_positions(avatar_count, length);
    let mut avatar_items = fields
        .into_iter()
        .zip(modes)
        .map(|(field_id, mode)| ChallengeDescriptor::Avatar { field_id, mode });
    let mut standard_items = standard.into_iter();
    let items = (0..length)
        .map(|pos| {
            if slots.binary_search(&pos).is_ok() {
                avatar_items.next().expect("one avatar item per slot")
            } else {
                standard_items.next().expect("standard items fill remaining slots")
            }
        })
        .collect();

    Ok(SessionPlan {
        session_id: format!("s-{}-{seed:016x}", now.millis()),
        player_id: state.player_id.clone(),
        created_at: now,
        seed,
        items,
        avatar_count,
        recognition_fraction: fraction,
    })
}

/// Build the concrete rounds for a plan. Item `i` is seeded from the plan seed
/// and its index.
pub fn materialize(
    plan: &SessionPlan,
    profile: &AvatarProfile,
    schema: &AvatarSchema,
    bank: &ChallengeBank,
    config: &ChallengeConfig,
) -> Result<Vec<Challenge>, SchedulerError> {
    plan.items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let seed = derive_seed(plan.seed, &format!("item/{i}"));
            match item {
                ChallengeDescriptor::Standard { entry_id } => {
                    let entry = bank.entry(entry_id).ok_or_else(|| SchedulerError::UnknownEntry(entry_id.clone()))?;
                    Ok(build_standard_challenge(entry, seed, config)?)
                }
                ChallengeDescriptor::Avatar { field_id, mode } => {
                    Ok(build_avatar_challenge(profile, schema, field_id, *mode, seed, config)?)
                }
            }
        })
        .collect()
}

/// Register an issued plan and open its challenges.
pub fn issue_session(state: &mut PlayerState, plan: &SessionPlan, challenges: &[Challenge], now: Timestamp) {
    for challenge in challenges {
        state.open_challenges.insert(
            challenge.challenge_id.clone(),
            OpenChallenge {
                challenge: challenge.clone(),
                session_id: plan.session_id.clone(),
                opened_at: now,
                failed_attempts: 0,
                last_offer_at: None,
            },
        );
    }
    state.sessions.insert(
        plan.session_id.clone(),
        SessionRecord {
            plan: plan.clone(),
            challenge_ids: challenges.iter().map(|c| c.challenge_id.clone()).collect(),
            completed: false,
        },
    );
}

fn is_stuck(open: &OpenChallenge, now: Timestamp) -> bool {
    open.failed_attempts >= STUCK_FAILED_ATTEMPTS || now - open.opened_at >= DAY_MS
}

/// Reminders and stuck-player hint offers due at `now`. Pure.
pub fn due_notifications(state: &PlayerState, now: Timestamp) -> Vec<Notification> {
    let mut out = Vec::new();
    let reference = state.last_played.unwrap_or(state.enrolled_at);
    let reminder_clear = state.last_reminder_at.is_none_or(|t| now - t >= DAY_MS);
    if now - reference >= DAY_MS && reminder_clear {
        let due_at = reference.plus_days(1).max(state.last_reminder_at.map_or(Timestamp(i64::MIN), |t| t.plus_days(1)));
        out.push(Notification {
            kind: NotificationKind::Reminder,
            player_id: state.player_id.clone(),
            due_at,
            payload: REMINDER_MESSAGE.into(),
        });
    }
    for (id, open) in &state.open_challenges {
        let offer_clear = open.last_offer_at.is_none_or(|t| now - t >= DAY_MS);
        if is_stuck(open, now) && offer_clear {
            out.push(Notification {
                kind: NotificationKind::StuckHintOffer { challenge_id: id.clone() },
                player_id: state.player_id.clone(),
                due_at: now,
                payload: STUCK_HINT_MESSAGE.into(),
            });
        }
    }
    out
}

/// Record delivery. A stuck offer carries a free letter-reveal grant.
pub fn mark_notified(state: &mut PlayerState, notifications: &[Notification], sent_at: Timestamp) {
    for n in notifications {
        match &n.kind {
            NotificationKind::Reminder => state.last_reminder_at = Some(sent_at),
            NotificationKind::StuckHintOffer { challenge_id } => {
                if let Some(open) = state.open_challenges.get_mut(challenge_id) {
                    open.last_offer_at = Some(sent_at);
                    state.grants.push(HintGrant {
                        challenge_id: challenge_id.clone(),
                        cost: 0,
                        granted_at: sent_at,
                        kind: HintKind::LetterReveal,
                    });
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub scores: Vec<ScoreEvent>,
    pub badges: Vec<Badge>,
    pub stage: Option<Stage>,
}

/// Apply a whole session's outcomes at once. Replaying a completed session is a no-op.
pub fn record_session(
    state: &mut PlayerState,
    session_id: &str,
    outcomes: &[(ChallengeDescriptor, Verdict)],
    config: &GameConfig,
    now: Timestamp,
) -> Result<SessionSummary, SchedulerError> {
    let record = state
        .sessions
        .get(session_id)
        .ok_or_else(|| SchedulerError::UnknownSession(session_id.to_string()))?;
    if record.completed {
        return Ok(SessionSummary::default());
    }
    let items = record.plan.items.clone();
    let ids = record.challenge_ids.clone();

    let mut used = vec![false; items.len()];
    let mut matched = Vec::with_capacity(outcomes.len());
    for (descriptor, verdict) in outcomes {
        let idx = (0..items.len())
            .find(|i| !used[*i] && items[*i] == *descriptor)
            .ok_or_else(|| SchedulerError::OutcomeMismatch(format!("{descriptor:?}")))?;
        used[idx] = true;
        matched.push((idx, verdict));
    }

    let mut summary = SessionSummary::default();
    for (idx, verdict) in matched {
        let score = apply_verdict(state, &ids[idx], items[idx].field_id(), verdict, now);
        summary.scores.push(score);
    }
    summary.badges = award_badges(state, config.progression.daily_quota, now);
    state.stage = evaluate_stage(state, &config.progression, now);
    summary.stage = Some(state.stage);
    for id in &ids {
        state.open_challenges.remove(id);
    }
    if let Some(record) = state.sessions.get_mut(session_id) {
        record.completed = true;
    }
    Ok(summary)
}
