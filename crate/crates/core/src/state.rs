//! The per-player aggregate. It is only ever mutated through the domain
//! operations, and can always be rebuilt by replaying the player's events.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::avatar::AvatarProfile;
use crate::challenge::Challenge;
use crate::fallback::AuthAttempt;
use crate::progression::{Badge, BadgeKind, HintGrant, Stage};
use crate::scheduler::SessionPlan;
use crate::time::{parse_tz, Timestamp};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldLedger {
    pub successes: Vec<Timestamp>,
    pub failures: Vec<Timestamp>,
}

impl FieldLedger {
    pub fn last_rehearsed(&self) -> Option<Timestamp> {
        self.successes.last().copied().max(self.failures.last().copied())
    }

    pub fn rehearsals(&self) -> usize {
        self.successes.len() + self.failures.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyTally {
    pub avatar_solved: u32,
    pub avatar_total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenChallenge {
    pub challenge: Challenge,
    pub session_id: String,
    pub opened_at: Timestamp,
    pub failed_attempts: u32,
    pub last_offer_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub plan: SessionPlan,
    pub challenge_ids: Vec<String>,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: String,
    pub timezone: String,
    pub enrolled_at: Timestamp,
    pub profile: AvatarProfile,
    pub balance: u32,
    pub stage: Stage,
    pub badges: Vec<Badge>,
    pub ledger: BTreeMap<String, FieldLedger>,
    pub days_played: BTreeSet<NaiveDate>,
    pub daily: BTreeMap<NaiveDate, DailyTally>,
    /// Most recent recognition answers, oldest first.
    pub recognition_history: Vec<bool>,
    pub last_played: Option<Timestamp>,
    pub open_challenges: BTreeMap<String, OpenChallenge>,
    pub grants: Vec<HintGrant>,
    pub sessions: BTreeMap<String, SessionRecord>,
    pub last_reminder_at: Option<Timestamp>,
    pub auth_history: Vec<AuthAttempt>,
}

impl PlayerState {
    pub fn new(player_id: impl Into<String>, profile: AvatarProfile, timezone: impl Into<String>, now: Timestamp) -> Self {
        PlayerState {
            player_id: player_id.into(),
            timezone: timezone.into(),
            enrolled_at: now,
            profile,
            balance: 0,
            stage: Stage::Early,
            badges: Vec::new(),
            ledger: BTreeMap::new(),
            days_played: BTreeSet::new(),
            daily: BTreeMap::new(),
            recognition_history: Vec::new(),
            last_played: None,
            open_challenges: BTreeMap::new(),
            grants: Vec::new(),
            sessions: BTreeMap::new(),
            last_reminder_at: None,
            auth_history: Vec::new(),
        }
    }

    /// The player's timezone; unknown names fall back to UTC.
    pub fn tz(&self) -> Tz {
        parse_tz(&self.timezone).unwrap_or(Tz::UTC)
    }

    pub fn has_badge(&self, kind: BadgeKind, date: NaiveDate) -> bool {
        self.badges.iter().any(|b| b.kind == kind && b.date == date)
    }

    pub fn solved_on(&self, date: NaiveDate) -> u32 {
        self.daily.get(&date).map_or(0, |t| t.avatar_solved)
    }

    pub fn last_rehearsed(&self, field_id: &str) -> Option<Timestamp> {
        self.ledger.get(field_id).and_then(FieldLedger::last_rehearsed)
    }

    /// The most recent grant of `kind` for a challenge.
    pub fn grant_for(&self, challenge_id: &str, kind: crate::progression::HintKind) -> Option<&HintGrant> {
        self.grants.iter().rev().find(|g| g.challenge_id == challenge_id && g.kind == kind)
    }

    /// The most recently issued session that still has open challenges.
    pub fn active_session(&self) -> Option<&SessionRecord> {
        self.sessions
            .values()
            .filter(|s| !s.completed && s.challenge_ids.iter().any(|c| self.open_challenges.contains_key(c)))
            .max_by_key(|s| (s.plan.created_at, s.plan.session_id.clone()))
    }

    /// Canonical serialized form, used for snapshot comparison.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }
}
