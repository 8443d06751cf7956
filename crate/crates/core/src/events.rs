//! Domain events and the replay fold that rebuilds [`PlayerState`].
//!
//! The live service and the replay path share [`apply_event`]: a command is
//! executed by building its event, applying it to a draft state, and only
//! committing the draft once the event is durably logged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenge::{Challenge, Verdict};
use crate::config::GameConfig;
use crate::fallback::AuthAttempt;
use crate::progression::{apply_verdict, evaluate_stage, purchase_hint, Badge, HintGrant, ProgressionError, ScoreEvent};
use crate::scheduler::{issue_session, mark_notified, Notification, SessionPlan};
use crate::state::PlayerState;
use crate::time::Timestamp;
use crate::avatar::AvatarProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    ProfileCreated { profile: AvatarProfile, timezone: String },
    SessionIssued { plan: SessionPlan, challenges: Vec<Challenge> },
    AnswerJudged {
        session_id: String,
        challenge_id: String,
        field_id: Option<String>,
        verdict: Verdict,
        score: ScoreEvent,
    },
    HintPurchased { grant: HintGrant, score: ScoreEvent },
    BadgeAwarded { badge: Badge },
    NotificationSent { notification: Notification },
    AuthAttempted { attempt: AuthAttempt },
}

impl Eq for Event {}

impl Event {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Event::ProfileCreated { .. } => "ProfileCreated",
            Event::SessionIssued { .. } => "SessionIssued",
            Event::AnswerJudged { .. } => "AnswerJudged",
            Event::HintPurchased { .. } => "HintPurchased",
            Event::BadgeAwarded { .. } => "BadgeAwarded",
            Event::NotificationSent { .. } => "NotificationSent",
            Event::AuthAttempted { .. } => "AuthAttempted",
        }
    }
}

/// An event with its per-player sequence number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub sequence: u64,
    pub player_id: String,
    pub timestamp: Timestamp,
    pub event: Event,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("no events for player")]
    UnknownPlayer,
    #[error("first event for `{0}` is not ProfileCreated")]
    MissingProfile(String),
    #[error("event {sequence} does not reproduce: {detail}")]
    Mismatch { sequence: u64, detail: String },
    #[error("sequence {got} follows {prev}")]
    OutOfOrder { prev: u64, got: u64 },
}

/// Apply one event to a state. `state` is `None` only before `ProfileCreated`.
pub fn apply_event(
    state: Option<PlayerState>,
    record: &EventRecord,
    config: &GameConfig,
) -> Result<PlayerState, ReplayError> {
    let now = record.timestamp;
    let mismatch = |detail: String| ReplayError::Mismatch { sequence: record.sequence, detail };
    let mut state = match (&record.event, state) {
        (Event::ProfileCreated { profile, timezone }, None) => {
            return Ok(PlayerState::new(record.player_id.clone(), profile.clone(), timezone.clone(), now));
        }
        (Event::ProfileCreated { .. }, Some(_)) => return Err(mismatch("profile created twice".into())),
        (_, None) => return Err(ReplayError::MissingProfile(record.player_id.clone())),
        (_, Some(s)) => s,
    };
    match &record.event {
        Event::ProfileCreated { .. } => unreachable!(),
        Event::SessionIssued { plan, challenges } => issue_session(&mut state, plan, challenges, now),
        Event::AnswerJudged { session_id, challenge_id, field_id, verdict, score } => {
            let got = apply_verdict(&mut state, challenge_id, field_id.as_deref(), verdict, now);
            if &got != score {
                return Err(mismatch(format!("score {got:?} != logged {score:?}")));
            }
            state.stage = evaluate_stage(&state, &config.progression, now);
            let session_done = state
                .sessions
                .get(session_id)
                .is_some_and(|s| s.challenge_ids.iter().all(|c| !state.open_challenges.contains_key(c)));
            if session_done {
                if let Some(s) = state.sessions.get_mut(session_id) {
                    s.completed = true;
                }
            }
        }
        Event::HintPurchased { grant, score } => {
            let (got_grant, got_score) =
                purchase_hint(&mut state, &grant.challenge_id, grant.kind, now).map_err(|e: ProgressionError| mismatch(e.to_string()))?;
            if &got_grant != grant || &got_score != score {
                return Err(mismatch("hint purchase diverged".into()));
            }
        }
        Event::BadgeAwarded { badge } => {
            if !state.has_badge(badge.kind, badge.date) {
                state.badges.push(badge.clone());
            }
        }
        Event::NotificationSent { notification } => {
            mark_notified(&mut state, std::slice::from_ref(notification), now)
        }
        Event::AuthAttempted { attempt } => state.auth_history.push(attempt.clone()),
    }
    Ok(state)
}

/// Fold `records` (one player's, in sequence order) on top of `start`.
pub fn replay<'a>(
    start: Option<PlayerState>,
    records: impl IntoIterator<Item = &'a EventRecord>,
    config: &GameConfig,
) -> Result<PlayerState, ReplayError> {
    let mut state = start;
    let mut prev: Option<u64> = None;
    for record in records {
        if let Some(p) = prev {
            if record.sequence <= p {
                return Err(ReplayError::OutOfOrder { prev: p, got: record.sequence });
            }
        }
        prev = Some(record.sequence);
        state = Some(apply_event(state, record, config)?);
    }
    state.ok_or(ReplayError::UnknownPlayer)
}
