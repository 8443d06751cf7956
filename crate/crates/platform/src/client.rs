//! HTTP client for the API and a scripted player that plays through it.

use std::collections::HashMap;

use avabond_core::challenge::{ChallengeBank, ClientChallenge, ClientInput};
use avabond_core::engagement::{MonitoringReport, Period};
use avabond_core::normalize::normalize_answer;
use avabond_core::progression::BadgeKind;
use avabond_core::time::DAY_MS;
use avabond_core::Stage;
use anyhow::{anyhow, bail, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dto::*;

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
    operator_token: Option<String>,
}

impl ApiClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new(), operator_token: None }
    }

    pub fn with_operator_token(mut self, token: impl Into<String>) -> Self {
        self.operator_token = Some(token.into());
        self
    }

    async fn decode<T: DeserializeOwned>(response: reqwest::Response) -> anyhow::Result<T> {
        let status = response.status();
        if status.is_success() {
            return Ok(response.json().await?);
        }
        let body: ApiErrorBody = response.json().await.with_context(|| format!("HTTP {status}"))?;
        Err(anyhow!(ApiFailure { status: status.as_u16(), body }))
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> anyhow::Result<T> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send().await?).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> anyhow::Result<T> {
        let mut request = self.http.post(format!("{}{path}", self.base)).json(body);
        if let Some(token) = &self.operator_token {
            request = request.header(OPERATOR_HEADER, token);
        }
        Self::decode(request.send().await?).await
    }

    pub async fn create_player(&self, seed: Option<u64>, timezone: Option<String>) -> anyhow::Result<PlayerCreated> {
        self.post("/players", &CreatePlayer { seed, timezone }).await
    }

    pub async fn session(&self, player: &str) -> anyhow::Result<SessionView> {
        self.get(&format!("/players/{player}/session")).await
    }

    pub async fn answer(&self, player: &str, challenge: &str, submission: &str) -> anyhow::Result<AnswerResponse> {
        let body = AnswerRequest { submission: submission.to_string() };
        self.post(&format!("/players/{player}/challenges/{challenge}/answer"), &body).await
    }

    pub async fn hint(&self, player: &str, challenge: &str, request: HintRequest) -> anyhow::Result<HintResponse> {
        self.post(&format!("/players/{player}/challenges/{challenge}/hint"), &request).await
    }

    pub async fn report(&self, player: &str, period: Period) -> anyhow::Result<MonitoringReport> {
        let name = match period {
            Period::Day => "day",
            Period::Week => "week",
            Period::Month => "month",
        };
        self.get(&format!("/players/{player}/report?period={name}")).await
    }

    pub async fn notifications(&self, player: &str) -> anyhow::Result<Vec<Delivered>> {
        self.get(&format!("/players/{player}/notifications")).await
    }

    pub async fn start_reset(&self, player: &str) -> anyhow::Result<ResetIssued> {
        self.post(&format!("/auth/{player}/reset"), &()).await
    }

    pub async fn finish_reset(&self, player: &str, token: &str, answers: Vec<String>) -> anyhow::Result<ResetDecision> {
        self.post(&format!("/auth/{player}/reset/{token}"), &ResetAnswers { answers }).await
    }

    pub async fn advance_clock(&self, ms: i64) -> anyhow::Result<ClockView> {
        self.post("/admin/clock", &ClockUpdate { set_ms: None, advance_ms: Some(ms) }).await
    }
}

/// A non-success response from the API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiFailure {
    pub status: u16,
    pub body: ApiErrorBody,
}

impl std::fmt::Display for ApiFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HTTP {}: {} ({})", self.status, self.body.message, self.body.error)
    }
}

impl std::error::Error for ApiFailure {}

/// What one simulated day of play produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayLog {
    pub day: u32,
    pub answered: u32,
    pub correct: u32,
    pub badges: Vec<BadgeKind>,
    pub stage: Stage,
    pub balance: u32,
    pub reminders: u32,
}

/// A player who has memorized their avatar and knows the standard puzzles.
pub struct ScriptedPlayer {
    pub player_id: String,
    avatar: HashMap<String, String>,
    standard: HashMap<Vec<String>, String>,
}

impl ScriptedPlayer {
    pub fn new(created: &PlayerCreated, bank: &ChallengeBank) -> Self {
        Self {
            player_id: created.player_id.clone(),
            avatar: created.avatar.iter().map(|f| (f.field_id.clone(), f.answer.clone())).collect(),
            standard: bank.entries.iter().map(|e| (e.image_refs.clone(), e.answer.clone())).collect(),
        }
    }

    /// The submission this player makes for a round.
    pub fn respond(&self, challenge: &ClientChallenge) -> anyhow::Result<String> {
        let known = match &challenge.field_id {
            Some(field) => self.avatar.get(field),
            None => self.standard.get(&challenge.image_refs),
        }
        .ok_or_else(|| anyhow!("no answer known for `{}`", challenge.challenge_id))?;
        Ok(match &challenge.input {
            ClientInput::Options { options } => options
                .iter()
                .find(|o| normalize_answer(o) == normalize_answer(known))
                .cloned()
                .ok_or_else(|| anyhow!("answer missing from options of `{}`", challenge.challenge_id))?,
            ClientInput::LetterPool { .. } => known.clone(),
        })
    }

    /// Play every open round until the current session is complete.
    pub async fn play_session(&self, client: &ApiClient) -> anyhow::Result<(u32, u32, Vec<BadgeKind>, Stage, u32)> {
        let (mut answered, mut correct, mut badges) = (0, 0, Vec::new());
        let mut stage = Stage::Early;
        let mut balance = 0;
        let view = client.session(&self.player_id).await?;
        for challenge in &view.challenges {
            let submission = self.respond(challenge)?;
            let result = client.answer(&self.player_id, &challenge.challenge_id, &submission).await?;
            answered += 1;
            correct += u32::from(result.verdict.correct);
            badges.extend(result.badges.iter().map(|b| b.kind));
            stage = result.stage;
            balance = result.score.balance_after;
        }
        if answered == 0 {
            bail!("session {} had no open rounds", view.session_id);
        }
        Ok((answered, correct, badges, stage, balance))
    }

    /// Play one session per day for `days` days, advancing the server clock a
    /// day after each. Needs an operator token on `client`.
    pub async fn play_days(&self, client: &ApiClient, days: u32) -> anyhow::Result<Vec<DayLog>> {
        let mut out = Vec::new();
        for day in 1..=days {
            let reminders = client
                .notifications(&self.player_id)
                .await?
                .iter()
                .filter(|d| d.notification.kind == avabond_core::scheduler::NotificationKind::Reminder)
                .count() as u32;
            let (answered, correct, badges, stage, balance) = self.play_session(client).await?;
            out.push(DayLog { day, answered, correct, badges, stage, balance, reminders });
            client.advance_clock(DAY_MS).await?;
        }
        Ok(out)
    }
}
