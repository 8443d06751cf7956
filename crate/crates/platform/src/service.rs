//! Game commands over the event log.
//!
//! Every command for a player runs under that player's lock. A command builds
//! its events, folds each onto a draft of the state with the same
//! `apply_event` used by replay, appends it to the log, and only then replaces
//! the live state.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use avabond_core::avatar::{answer_for, AvatarSchema};
use avabond_core::challenge::{check_answer, reveal_letter, verbal_cues_for, ChallengeBank};
use avabond_core::engagement::{
    lapse_days, milestones_crossed, monitoring_report, social_cue, CueTrigger, MonitoringReport, Period,
};
use avabond_core::events::apply_event;
use avabond_core::fallback::{issue_reset, verify_reset, AuthError, ResetSession, RESET_SESSION_TTL_MS};
use avabond_core::progression::{badges_due, purchase_hint, score_for, HintKind, ProgressionError};
use avabond_core::rng::derive_seed;
use avabond_core::scheduler::{due_notifications, materialize, next_session_plan, NotificationKind};
use avabond_core::{generate_profile, AuthPolicy, Event, EventRecord, GameConfig, PlayerState, Timestamp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::dto::*;
use crate::log::{EventLog, LogError, Recovery};
use crate::snapshot::{load_state, LoadError, Snapshot, SnapshotStore, SNAPSHOT_EVERY};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("insufficient points: balance {balance}, cost {cost}")]
    InsufficientPoints { balance: u32, cost: u32 },
    #[error("operator token required")]
    Forbidden,
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::NotFound(_) => "not_found",
            ApiError::Conflict(_) => "conflict",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::InsufficientPoints { .. } => "insufficient_points",
            ApiError::Forbidden => "forbidden",
            ApiError::Internal(_) => "internal",
        }
    }

    pub fn body(&self) -> ApiErrorBody {
        let (balance, cost) = match self {
            ApiError::InsufficientPoints { balance, cost } => (Some(*balance), Some(*cost)),
            _ => (None, None),
        };
        ApiErrorBody { error: self.code().into(), message: self.to_string(), balance, cost }
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

/// Deployment settings, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformConfig {
    pub game: GameConfig,
    pub auth: AuthPolicy,
    pub fsync: bool,
    pub snapshot_every: u64,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self { game: GameConfig::default(), auth: AuthPolicy::default(), fsync: true, snapshot_every: SNAPSHOT_EVERY }
    }
}

impl PlatformConfig {
    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let config: Self = toml::from_str(&text)?;
        config.game.validate().map_err(anyhow::Error::msg)?;
        Ok(config)
    }
}

pub struct ServiceOptions {
    pub data_dir: PathBuf,
    pub config: PlatformConfig,
    pub schema: AvatarSchema,
    pub bank: ChallengeBank,
    pub operator_token: Option<String>,
}

impl ServiceOptions {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            config: PlatformConfig::default(),
            schema: AvatarSchema::default_schema(),
            bank: ChallengeBank::default_bank(),
            operator_token: None,
        }
    }
}

pub fn log_path(data_dir: &Path) -> PathBuf {
    data_dir.join("events.log")
}

pub fn snapshot_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("snapshots")
}

type PlayerSlot = Arc<Mutex<PlayerState>>;

pub struct Service {
    config: PlatformConfig,
    schema: AvatarSchema,
    bank: ChallengeBank,
    operator_token: Option<String>,
    clock: Arc<dyn Clock>,
    log: Mutex<EventLog>,
    snapshots: SnapshotStore,
    players: RwLock<HashMap<String, PlayerSlot>>,
    resets: Mutex<HashMap<String, (String, ResetSession)>>,
    counter: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Service {
    /// Open the data directory and rebuild every player from snapshot plus log tail.
    pub fn open(options: ServiceOptions, clock: Arc<dyn Clock>) -> anyhow::Result<(Self, Recovery)> {
        options.config.game.validate().map_err(anyhow::Error::msg)?;
        options.config.auth.validate(&options.schema)?;
        let (log, recovery) = EventLog::open(log_path(&options.data_dir), options.config.fsync)?;
        let snapshots = SnapshotStore::new(snapshot_dir(&options.data_dir))?;
        let mut players = HashMap::new();
        for player in log.players() {
            let snapshot = snapshots.load(player);
            let state = match load_state(log.records(player), player, snapshot.as_ref(), &options.config.game) {
                Ok(state) => state,
                Err(LoadError::SnapshotAhead { .. }) => load_state(log.records(player), player, None, &options.config.game)?,
                Err(e) => return Err(e.into()),
            };
            players.insert(player.to_string(), Arc::new(Mutex::new(state)));
        }
        tracing::info!(players = players.len(), events = log.len(), "event log loaded");
        let service = Service {
            config: options.config,
            schema: options.schema,
            bank: options.bank,
            operator_token: options.operator_token,
            clock,
            log: Mutex::new(log),
            snapshots,
            players: RwLock::new(players),
            resets: Mutex::new(HashMap::new()),
            counter: AtomicU64::new(0),
        };
        Ok((service, recovery))
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.config
    }

    fn slot(&self, player_id: &str) -> Result<PlayerSlot, ApiError> {
        self.players
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(player_id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown player `{player_id}`")))
    }

    /// Log `event` and fold it into `state`. The state changes only if the
    /// append succeeded.
    fn commit(&self, state: &mut PlayerState, event: Event, now: Timestamp) -> Result<EventRecord, ApiError> {
        let mut log = lock(&self.log);
        let record = EventRecord {
            sequence: log.next_sequence(&state.player_id),
            player_id: state.player_id.clone(),
            timestamp: now,
            event,
        };
        let draft = apply_event(Some(state.clone()), &record, &self.config.game)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        log.append(record.clone())?;
        drop(log);
        *state = draft;
        self.maybe_snapshot(state, record.sequence);
        Ok(record)
    }

    fn maybe_snapshot(&self, state: &PlayerState, sequence: u64) {
        if self.config.snapshot_every > 0 && sequence.is_multiple_of(self.config.snapshot_every) {
            let snapshot =
                Snapshot { player_id: state.player_id.clone(), as_of_sequence: sequence, state: state.clone() };
            if let Err(e) = self.snapshots.save(&snapshot) {
                tracing::warn!(player = %state.player_id, error = %e, "snapshot write failed");
            }
        }
    }

    pub fn create_player(&self, request: CreatePlayer) -> Result<PlayerCreated, ApiError> {
        let now = self.now();
        let seed = request.seed.unwrap_or_else(|| {
            let n = self.counter.fetch_add(1, Ordering::Relaxed);
            derive_seed(now.millis() as u64 ^ n.rotate_left(32), "player-seed")
        });
        let timezone = request.timezone.unwrap_or_else(|| self.config.game.progression.timezone.clone());
        if avabond_core::time::parse_tz(&timezone).is_none() {
            return Err(ApiError::BadRequest(format!("unknown timezone `{timezone}`")));
        }
        let player_id = format!("p-{:016x}", derive_seed(seed, "player-id"));
        let profile = generate_profile(&self.schema, seed).map_err(|e| ApiError::Internal(e.to_string()))?;

        let mut players = self.players.write().unwrap_or_else(|p| p.into_inner());
        if players.contains_key(&player_id) {
            return Err(ApiError::Conflict(format!("player `{player_id}` already exists")));
        }
        let record = {
            let mut log = lock(&self.log);
            let record = EventRecord {
                sequence: log.next_sequence(&player_id),
                player_id: player_id.clone(),
                timestamp: now,
                event: Event::ProfileCreated { profile: profile.clone(), timezone: timezone.clone() },
            };
            log.append(record.clone())?;
            record
        };
        let state = apply_event(None, &record, &self.config.game).map_err(|e| ApiError::Internal(e.to_string()))?;
        players.insert(player_id.clone(), Arc::new(Mutex::new(state)));

        let avatar = self
            .schema
            .fields
            .iter()
            .map(|f| AvatarFact {
                field_id: f.field_id.clone(),
                question_text: f.question_text.clone(),
                answer: answer_for(&profile, &f.field_id).unwrap_or_default().to_string(),
            })
            .collect();
        Ok(PlayerCreated {
            player_id,
            schema_id: profile.schema_id.clone(),
            profile_id: profile.profile_id.clone(),
            timezone,
            avatar,
        })
    }

    /// The open session, issuing a fresh one when none is active.
    pub fn session(&self, player_id: &str) -> Result<SessionView, ApiError> {
        let slot = self.slot(player_id)?;
        let mut state = lock(&slot);
        let now = self.now();
        if state.active_session().is_none() {
            let seed = derive_seed(state.profile.seed, &format!("session/{}", state.sessions.len()));
            let plan = next_session_plan(&state, &self.schema, &self.bank, &self.config.game, now, seed)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
            let challenges = materialize(&plan, &state.profile, &self.schema, &self.bank, &self.config.game.challenge)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
            self.commit(&mut state, Event::SessionIssued { plan, challenges }, now)?;
        }
        let session = state.active_session().ok_or_else(|| ApiError::Internal("no session after issue".into()))?;
        Ok(SessionView {
            session_id: session.plan.session_id.clone(),
            created_at: session.plan.created_at,
            avatar_count: session.plan.avatar_count,
            challenges: session
                .challenge_ids
                .iter()
                .filter_map(|id| state.open_challenges.get(id))
                .map(|open| open.challenge.client_view())
                .collect(),
        })
    }

    pub fn answer(&self, player_id: &str, challenge_id: &str, request: AnswerRequest) -> Result<AnswerResponse, ApiError> {
        let slot = self.slot(player_id)?;
        let mut state = lock(&slot);
        let now = self.now();
        let open = state
            .open_challenges
            .get(challenge_id)
            .ok_or_else(|| ApiError::NotFound(format!("no open challenge `{challenge_id}`")))?
            .clone();
        let verdict = check_answer(&open.challenge, &request.submission);
        let first_today = !state.days_played.contains(&now.local_date(state.tz()));
        let lapse = lapse_days(&state, now);
        let balance_before = state.balance;

        let score = score_for(state.balance, challenge_id, &verdict, now);
        self.commit(
            &mut state,
            Event::AnswerJudged {
                session_id: open.session_id.clone(),
                challenge_id: challenge_id.to_string(),
                field_id: open.challenge.field_id.clone(),
                verdict,
                score: score.clone(),
            },
            now,
        )?;
        let badges = badges_due(&state, self.config.game.progression.daily_quota, now);
        for badge in &badges {
            self.commit(&mut state, Event::BadgeAwarded { badge: badge.clone() }, now)?;
        }

        let trigger = match lapse {
            Some(days) if first_today => Some(CueTrigger::Lapse { days }),
            _ if !verdict.correct => Some(CueTrigger::IncorrectAnswer),
            _ if !badges.is_empty() || !milestones_crossed(balance_before, state.balance).is_empty() => {
                Some(CueTrigger::Milestone)
            }
            _ if first_today => Some(CueTrigger::DailyReturn),
            _ => None,
        };
        let session_completed = state.sessions.get(&open.session_id).is_some_and(|s| s.completed);
        Ok(AnswerResponse {
            verdict,
            score,
            badges,
            stage: state.stage,
            cue: trigger.map(|t| social_cue(t, &state)),
            challenge_open: state.open_challenges.contains_key(challenge_id),
            session_completed,
        })
    }

    pub fn hint(&self, player_id: &str, challenge_id: &str, request: HintRequest) -> Result<HintResponse, ApiError> {
        let slot = self.slot(player_id)?;
        let mut state = lock(&slot);
        let now = self.now();
        let challenge = state
            .open_challenges
            .get(challenge_id)
            .ok_or_else(|| ApiError::NotFound(format!("no open challenge `{challenge_id}`")))?
            .challenge
            .clone();
        let kind = request.kind.unwrap_or(HintKind::VerbalCues);
        let (grant, score) = purchase_hint(&mut state.clone(), challenge_id, kind, now).map_err(|e| match e {
            ProgressionError::InsufficientPoints { balance, cost } => ApiError::InsufficientPoints { balance, cost },
            ProgressionError::DuplicateGrant(id) => ApiError::Conflict(format!("hint already granted for `{id}`")),
            other => ApiError::Internal(other.to_string()),
        })?;
        self.commit(&mut state, Event::HintPurchased { grant: grant.clone(), score: score.clone() }, now)?;
        let (cues, letter) = match kind {
            HintKind::VerbalCues => (verbal_cues_for(&challenge, Some(&grant), now).ok(), None),
            HintKind::LetterReveal => (None, reveal_letter(&challenge, Some(&grant), now).ok()),
        };
        Ok(HintResponse { grant, score, cues, letter })
    }

    pub fn report(&self, player_id: &str, period: Period) -> Result<MonitoringReport, ApiError> {
        let records = lock(&self.log).records(player_id).to_vec();
        monitoring_report(&records, player_id, period, self.now(), &self.config.game.progression)
            .map_err(|e| ApiError::NotFound(e.to_string()))
    }

    /// Deliver and record every notification due now.
    pub fn notifications(&self, player_id: &str) -> Result<Vec<Delivered>, ApiError> {
        let slot = self.slot(player_id)?;
        let mut state = lock(&slot);
        let now = self.now();
        let mut delivered = Vec::new();
        for notification in due_notifications(&state, now) {
            self.commit(&mut state, Event::NotificationSent { notification: notification.clone() }, now)?;
            let letter = match &notification.kind {
                NotificationKind::StuckHintOffer { challenge_id } => state
                    .open_challenges
                    .get(challenge_id)
                    .and_then(|o| reveal_letter(&o.challenge, state.grant_for(challenge_id, HintKind::LetterReveal), now).ok()),
                NotificationKind::Reminder => None,
            };
            delivered.push(Delivered { notification, letter });
        }
        Ok(delivered)
    }

    pub fn start_reset(&self, player_id: &str) -> Result<ResetIssued, ApiError> {
        let slot = self.slot(player_id)?;
        let state = lock(&slot);
        let now = self.now();
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let seed = derive_seed(state.profile.seed, &format!("reset/{}/{n}", now.millis()));
        let session = issue_reset(&state.profile, &self.schema, &self.config.auth, seed, now).map_err(|e| match e {
            AuthError::EntropyUnattainable(_) | AuthError::InvalidPolicy(_) => ApiError::Conflict(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        })?;
        let questions = session
            .question_set
            .iter()
            .map(|f| ResetQuestion {
                field_id: f.clone(),
                question_text: self.schema.field(f).map(|s| s.question_text.clone()).unwrap_or_default(),
            })
            .collect();
        let issued = ResetIssued {
            token: session.token.clone(),
            questions,
            expires_at: now + RESET_SESSION_TTL_MS,
        };
        let mut resets = lock(&self.resets);
        resets.retain(|_, (_, s)| !s.expired(now));
        resets.insert(session.token.clone(), (player_id.to_string(), session));
        Ok(issued)
    }

    pub fn finish_reset(&self, player_id: &str, token: &str, request: ResetAnswers) -> Result<ResetDecision, ApiError> {
        let slot = self.slot(player_id)?;
        let mut state = lock(&slot);
        let now = self.now();
        let session = lock(&self.resets)
            .get(token)
            .filter(|(owner, _)| owner == player_id)
            .map(|(_, s)| s.clone());
        let mut history = state.auth_history.clone();
        let result = verify_reset(
            &state.profile,
            session.as_ref(),
            &request.answers,
            &self.config.auth,
            &mut history,
            state.tz(),
            now,
        );
        let attempt = history.pop().ok_or_else(|| ApiError::Internal("reset attempt not recorded".into()))?;
        self.commit(&mut state, Event::AuthAttempted { attempt }, now)?;
        match result {
            Ok(outcome) => {
                if outcome == avabond_core::AuthOutcome::Granted {
                    lock(&self.resets).remove(token);
                }
                Ok(ResetDecision { outcome })
            }
            Err(AuthError::SessionUnknown) => {
                lock(&self.resets).remove(token);
                Err(ApiError::NotFound("reset session unknown or expired".into()))
            }
            Err(e) => Err(ApiError::Internal(e.to_string())),
        }
    }

    pub fn check_operator(&self, token: Option<&str>) -> Result<(), ApiError> {
        match (&self.operator_token, token) {
            (Some(expected), Some(given)) if expected == given => Ok(()),
            _ => Err(ApiError::Forbidden),
        }
    }

    pub fn update_clock(&self, update: ClockUpdate) -> Result<ClockView, ApiError> {
        let target = match (update.set_ms, update.advance_ms) {
            (Some(at), None) => Timestamp(at),
            (None, Some(ms)) => self.now() + ms,
            _ => return Err(ApiError::BadRequest("give exactly one of set_ms or advance_ms".into())),
        };
        if target < self.now() {
            return Err(ApiError::BadRequest("the clock only moves forward".into()));
        }
        if !self.clock.set(target) {
            return Err(ApiError::Conflict("this server runs on the system clock".into()));
        }
        Ok(ClockView { now: self.now() })
    }

    /// A copy of a player's current state.
    pub fn state(&self, player_id: &str) -> Result<PlayerState, ApiError> {
        let slot = self.slot(player_id)?;
        let state = lock(&slot).clone();
        Ok(state)
    }
}
