//! Request and response bodies of the HTTP API.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/players` | [`CreatePlayer`] | [`PlayerCreated`] |
//! | GET | `/players/{id}/session` | | [`SessionView`] |
//! | POST | `/players/{id}/challenges/{cid}/answer` | [`AnswerRequest`] | [`AnswerResponse`] |
//! | POST | `/players/{id}/challenges/{cid}/hint` | [`HintRequest`] | [`HintResponse`], 402 when points are short |
//! | GET | `/players/{id}/report?period=day\|week\|month` | | `MonitoringReport` |
//! | GET | `/players/{id}/notifications` | | `Vec<`[`Delivered`]`>` |
//! | POST | `/auth/{id}/reset` | | [`ResetIssued`] |
//! | POST | `/auth/{id}/reset/{token}` | [`ResetAnswers`] | [`ResetDecision`] |
//! | GET/POST | `/admin/clock` | [`ClockUpdate`] | [`ClockView`], needs `x-operator-token` |
//!
//! Errors come back as [`ApiErrorBody`].

use avabond_core::challenge::ClientChallenge;
use avabond_core::engagement::SocialCueMessage;
use avabond_core::progression::{Badge, HintGrant, HintKind, ScoreEvent};
use avabond_core::scheduler::Notification;
use avabond_core::{AuthOutcome, Stage, Timestamp, Verdict};
use serde::{Deserialize, Serialize};

/// Header carrying the operator token for admin endpoints.
pub const OPERATOR_HEADER: &str = "x-operator-token";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatePlayer {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub timezone: Option<String>,
}

/// A new player's avatar, returned once so the player can study it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerCreated {
    pub player_id: String,
    pub schema_id: String,
    pub profile_id: String,
    pub timezone: String,
    pub avatar: Vec<AvatarFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvatarFact {
    pub field_id: String,
    pub question_text: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: Timestamp,
    pub avatar_count: usize,
    /// Rounds still open, in plan order.
    pub challenges: Vec<ClientChallenge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub submission: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub verdict: Verdict,
    pub score: ScoreEvent,
    pub badges: Vec<Badge>,
    pub stage: Stage,
    #[serde(default)]
    pub cue: Option<SocialCueMessage>,
    pub challenge_open: bool,
    pub session_completed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintRequest {
    #[serde(default)]
    pub kind: Option<HintKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintResponse {
    pub grant: HintGrant,
    pub score: ScoreEvent,
    /// Index-aligned with the challenge's images.
    #[serde(default)]
    pub cues: Option<Vec<String>>,
    #[serde(default)]
    pub letter: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivered {
    pub notification: Notification,
    /// Free letter that comes with a stuck-player offer.
    #[serde(default)]
    pub letter: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetQuestion {
    pub field_id: String,
    pub question_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetIssued {
    pub token: String,
    pub questions: Vec<ResetQuestion>,
    pub expires_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetAnswers {
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetDecision {
    pub outcome: AuthOutcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockUpdate {
    #[serde(default)]
    pub set_ms: Option<i64>,
    #[serde(default)]
    pub advance_ms: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockView {
    pub now: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<u32>,
}
