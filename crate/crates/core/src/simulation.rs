//! Simulated players driven through the real scheduler, challenge and
//! progression code, plus configuration sweeps over them.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avatar::{generate_profile, AvatarError, AvatarSchema};
use crate::challenge::{check_answer, Challenge, ChallengeBank};
use crate::config::GameConfig;
use crate::memory::{recall_probability, MemoryParams, MemoryState};
use crate::normalize::normalize_answer;
use crate::num::Real;
use crate::rng::{derive_seed, SeededStream};
use crate::scheduler::{
    due_notifications, issue_session, mark_notified, materialize, next_session_plan, record_session, NotificationKind,
    SchedulerError,
};
use crate::state::PlayerState;
use crate::time::{Timestamp, DAY_MS, HOUR_MS};

/// Days at which recall is probed, when inside the horizon.
pub const CHECKPOINT_DAYS: [u32; 4] = [7, 30, 90, 180];

/// Simulated enrollment instant: 2026-01-05T00:00:00Z, a Monday.
pub const SIM_EPOCH: Timestamp = Timestamp(1_767_571_200_000);

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Avatar(#[from] AvatarError),
}

/// How a simulated player behaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionPolicy {
    /// Probability of attending each scheduled session.
    pub adherence: f64,
    /// Probability of solving a standard puzzle.
    pub standard_skill: f64,
    pub sessions_per_day: u32,
    /// Hours after local midnight of the first session each day.
    pub first_session_hour: u32,
}

impl Default for SessionPolicy {
    fn default() -> Self {
        Self { adherence: 0.8, standard_skill: 0.9, sessions_per_day: 1, first_session_hour: 19 }
    }
}

impl SessionPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.adherence) || !(0.0..=1.0).contains(&self.standard_skill) {
            return Err("adherence and standard_skill must be in [0, 1]".into());
        }
        if self.sessions_per_day == 0 || self.sessions_per_day > 24 {
            return Err("sessions_per_day must be in 1..=24".into());
        }
        if self.first_session_hour > 23 {
            return Err("first_session_hour must be in 0..=23".into());
        }
        Ok(())
    }

    fn session_offsets(&self) -> Vec<i64> {
        let first = i64::from(self.first_session_hour);
        let n = i64::from(self.sessions_per_day);
        let span = 24 - first;
        (0..n).map(|i| (first * HOUR_MS) + i * span * HOUR_MS / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub day: u32,
    pub recall: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome<T> {
    pub config: GameConfig,
    pub params: MemoryParams<T>,
    pub policy: SessionPolicy,
    pub seed: u64,
    pub horizon_days: u32,
    pub checkpoints: Vec<Checkpoint<T>>,
    /// Mean unassisted recall over all fields at the end of the horizon.
    pub final_recall: T,
    pub sessions_played: u32,
    pub reminders_sent: u32,
    pub avatar_correct: u32,
    pub avatar_total: u32,
}

fn wrong_submission(challenge: &Challenge) -> String {
    let answer = normalize_answer(&challenge.answer);
    if let Some(option) = challenge.options.iter().flatten().find(|o| normalize_answer(o) != answer) {
        return option.clone();
    }
    let letters: String = challenge.letter_pool.iter().flatten().take(1).collect();
    if normalize_answer(&letters) != answer {
        letters
    } else {
        challenge.letter_pool.iter().flatten().take(2).collect()
    }
}

/// Run one simulated player for `horizon_days`, fully determined by `seed`.
pub fn simulate_player<T: Real>(
    schema: &AvatarSchema,
    bank: &ChallengeBank,
    config: &GameConfig,
    params: &MemoryParams<T>,
    horizon_days: u32,
    policy: &SessionPolicy,
    seed: u64,
) -> Result<SimOutcome<T>, SimError> {
    config.validate().map_err(SimError::InvalidConfig)?;
    params.validate().map_err(SimError::InvalidConfig)?;
    policy.validate().map_err(SimError::InvalidConfig)?;
    if horizon_days == 0 {
        return Err(SimError::InvalidConfig("horizon must be at least one day".into()));
    }

    let start = SIM_EPOCH;
    let profile = generate_profile(schema, derive_seed(seed, "profile"))?;
    let mut state = PlayerState::new(format!("sim-{seed:016x}"), profile, config.progression.timezone.clone(), start);
    let mut memory = MemoryState::encode(schema.field_ids(), params, start);
    let mut attend = SeededStream::new(seed, "attendance");
    let mut answers = SeededStream::new(seed, "answers");
    let mut plans = SeededStream::new(seed, "plans");
    let offsets = policy.session_offsets();

    let mut checkpoints = Vec::new();
    let (mut sessions_played, mut reminders_sent, mut avatar_correct, mut avatar_total) = (0, 0, 0, 0);
    for day in 0..horizon_days {
        if CHECKPOINT_DAYS.contains(&day) {
            let at = start + i64::from(day) * DAY_MS;
            checkpoints.push(Checkpoint { day, recall: memory.mean_recall(at, params) });
        }
        for offset in &offsets {
            let now = start + i64::from(day) * DAY_MS + *offset;
            let notes = due_notifications(&state, now);
            reminders_sent += notes.iter().filter(|n| n.kind == NotificationKind::Reminder).count() as u32;
            mark_notified(&mut state, &notes, now);

            let plan_seed = plans.next_u64();
            if !attend.bernoulli(policy.adherence) {
                continue;
            }
            sessions_played += 1;
            let plan = next_session_plan(&state, schema, bank, config, now, plan_seed)?;
            let challenges = materialize(&plan, &state.profile, schema, bank, &config.challenge)?;
            issue_session(&mut state, &plan, &challenges, now);

            let mut outcomes = Vec::with_capacity(challenges.len());
            for (item, challenge) in plan.items.iter().zip(&challenges) {
                let success = match (item.field_id(), item.mode()) {
                    (Some(field), Some(mode)) => {
                        let mem = memory.fields.get(field).expect("profile field has memory");
                        let p = recall_probability(mem, now, mode, params);
                        answers.bernoulli(p.to_f64().unwrap_or(0.0))
                    }
                    _ => answers.bernoulli(policy.standard_skill),
                };
                let submission = if success { challenge.answer.clone() } else { wrong_submission(challenge) };
                let verdict = check_answer(challenge, &submission);
                debug_assert_eq!(verdict.correct, success);
                if let Some(field) = item.field_id() {
                    avatar_total += 1;
                    avatar_correct += u32::from(verdict.correct);
                    if let Some(mem) = memory.fields.get_mut(field) {
                        mem.rehearse(verdict.correct, params, now);
                    }
                }
                outcomes.push((item.clone(), verdict));
            }
            record_session(&mut state, &plan.session_id, &outcomes, config, now + 10 * 60 * 1000)?;
        }
    }

    let end = start + i64::from(horizon_days) * DAY_MS;
    if CHECKPOINT_DAYS.contains(&horizon_days) {
        checkpoints.push(Checkpoint { day: horizon_days, recall: memory.mean_recall(end, params) });
    }
    Ok(SimOutcome {
        config: config.clone(),
        params: *params,
        policy: *policy,
        seed,
        horizon_days,
        checkpoints,
        final_recall: memory.mean_recall(end, params),
        sessions_played,
        reminders_sent,
        avatar_correct,
        avatar_total,
    })
}

/// Recall of a player who never rehearses, at `day` after enrollment.
pub fn pure_decay_recall<T: Real>(params: &MemoryParams<T>, day: u32) -> T {
    let hours = T::from_count(day as usize * 24);
    T::lit(2.0).powf(-hours / params.initial_half_life_hours)
}

/// One ranked row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rank: usize,
    pub config_index: usize,
    pub daily_quota: u32,
    pub session_length: usize,
    pub seeds: usize,
    pub mean_final_recall: f64,
    pub mean_sessions_played: f64,
    pub mean_reminders_sent: f64,
    pub mean_avatar_accuracy: f64,
}

/// Run every (config, seed) pair in parallel and rank the configs by mean
/// final recall, then by fewer sessions played.
pub fn sweep_configs<T: Real>(
    schema: &AvatarSchema,
    bank: &ChallengeBank,
    grid: &[GameConfig],
    params: &MemoryParams<T>,
    policy: &SessionPolicy,
    seeds: &[u64],
    horizon_days: u32,
) -> Result<Vec<SweepRow>, SimError> {
    if grid.is_empty() {
        return Err(SimError::InvalidConfig("sweep grid is empty".into()));
    }
    if seeds.is_empty() {
        return Err(SimError::InvalidConfig("sweep needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..grid.len()).flat_map(|c| seeds.iter().map(move |s| (c, *s))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(c, seed)| simulate_player(schema, bank, &grid[c], params, horizon_days, policy, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let n = seeds.len() as f64;
    let mut rows: Vec<SweepRow> = grid
        .iter()
        .enumerate()
        .map(|(c, config)| {
            let runs = &outcomes[c * seeds.len()..(c + 1) * seeds.len()];
            let mean = |f: &dyn Fn(&SimOutcome<T>) -> f64| runs.iter().map(f).sum::<f64>() / n;
            SweepRow {
                rank: 0,
                config_index: c,
                daily_quota: config.progression.daily_quota,
                session_length: config.scheduler.session_length,
                seeds: seeds.len(),
                mean_final_recall: mean(&|o| o.final_recall.to_f64().unwrap_or(f64::NAN)),
                mean_sessions_played: mean(&|o| f64::from(o.sessions_played)),
                mean_reminders_sent: mean(&|o| f64::from(o.reminders_sent)),
                mean_avatar_accuracy: mean(&|o| {
                    if o.avatar_total == 0 {
                        0.0
                    } else {
                        f64::from(o.avatar_correct) / f64::from(o.avatar_total)
                    }
                }),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.mean_final_recall
            .partial_cmp(&a.mean_final_recall)
            .unwrap_or(Ordering::Equal)
            .then(a.mean_sessions_played.partial_cmp(&b.mean_sessions_played).unwrap_or(Ordering::Equal))
            .then(a.config_index.cmp(&b.config_index))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}
