//! Game rounds: four ordered pictures and one hidden word.
//!
//! Standard rounds come from a bank of picture puzzles. Avatar rounds ask
//! about a profile field, either by offering a few options (recognition) or
//! by having the player compose the answer from a 12-letter pool without
//! revealing its length (recall).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avatar::{answer_for, AvatarError, AvatarProfile, AvatarSchema, IMAGES_PER_CHALLENGE};
use crate::normalize::{answer_letters, normalize_answer};
use crate::progression::{HintGrant, HintKind};
use crate::rng::{derive_seed, SeededStream};
use crate::time::{Timestamp, HOUR_MS};

/// Letters offered for composing an answer. Kept as a constant; pool size is
/// not adapted to the answer space.
pub const LETTER_POOL_SIZE: usize = 12;

/// A purchased hint stays usable this long.
pub const HINT_GRANT_TTL_MS: i64 = 24 * HOUR_MS;

const DEFAULT_BANK_TOML: &str = include_str!("../data/default_bank.toml");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChallengeError {
    #[error("answer has {0} letters, the pool holds {LETTER_POOL_SIZE}")]
    AnswerTooLong(usize),
    #[error("answer has no letters")]
    EmptyAnswer,
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("answer pool has {pool} entries, {needed} options requested")]
    PoolTooSmall { pool: usize, needed: usize },
    #[error("no valid hint grant for this challenge")]
    NoGrant,
    #[error("invalid bank entry: {0}")]
    InvalidEntry(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<AvatarError> for ChallengeError {
    fn from(e: AvatarError) -> Self {
        match e {
            AvatarError::UnknownField(f) => ChallengeError::UnknownField(f),
            other => ChallengeError::InvalidEntry(other.to_string()),
        }
    }
}

pub type Result<T, E = ChallengeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChallengeKind {
    Standard,
    AvatarRecognition,
    AvatarRecall,
}

impl ChallengeKind {
    pub fn is_avatar(self) -> bool {
        !matches!(self, ChallengeKind::Standard)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AvatarMode {
    Recognition,
    Recall,
}

impl AvatarMode {
    pub fn kind(self) -> ChallengeKind {
        match self {
            AvatarMode::Recognition => ChallengeKind::AvatarRecognition,
            AvatarMode::Recall => ChallengeKind::AvatarRecall,
        }
    }
}

/// Which challenge kinds hide the answer length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HideLengthScope {
    #[default]
    Avatar,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChallengeConfig {
    /// Options shown in a recognition round, 2..=8.
    pub option_count: usize,
    pub hide_length_scope: HideLengthScope,
    /// Whether giving up shows the answer.
    pub reveal_on_give_up: bool,
}

impl Default for ChallengeConfig {
    fn default() -> Self {
        ChallengeConfig { option_count: 4, hide_length_scope: HideLengthScope::Avatar, reveal_on_give_up: false }
    }
}

impl ChallengeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.option_count) {
            return Err(ChallengeError::InvalidConfig(format!(
                "option_count {} outside 2..=8",
                self.option_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankEntry {
    pub entry_id: String,
    pub answer: String,
    pub image_refs: Vec<String>,
    pub verbal_cues: Vec<String>,
}

impl BankEntry {
    pub fn validate(&self) -> Result<()> {
        if self.image_refs.len() != IMAGES_PER_CHALLENGE || self.verbal_cues.len() != IMAGES_PER_CHALLENGE {
            return Err(ChallengeError::InvalidEntry(format!(
                "entry `{}` must have {IMAGES_PER_CHALLENGE} images and {IMAGES_PER_CHALLENGE} cues",
                self.entry_id
            )));
        }
        check_letter_count(&self.answer).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChallengeBank {
    pub bank_id: String,
    pub entries: Vec<BankEntry>,
}

impl ChallengeBank {
    pub fn default_bank() -> Self {
        Self::from_toml_str(DEFAULT_BANK_TOML).expect("bundled bank is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let bank: ChallengeBank = toml::from_str(text).map_err(|e| ChallengeError::InvalidEntry(e.to_string()))?;
        let mut ids = BTreeSet::new();
        for entry in &bank.entries {
            entry.validate()?;
            if !ids.insert(entry.entry_id.as_str()) {
                return Err(ChallengeError::InvalidEntry(format!("duplicate entry id `{}`", entry.entry_id)));
            }
        }
        Ok(bank)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ChallengeError::InvalidEntry(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn entry(&self, entry_id: &str) -> Option<&BankEntry> {
        self.entries.iter().find(|e| e.entry_id == entry_id)
    }
}

/// One game round, including its hidden answer. Never send this to a client;
/// use [`Challenge::client_view`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub challenge_id: String,
    pub kind: ChallengeKind,
    pub image_refs: Vec<String>,
    pub answer: String,
    pub letter_pool: Option<Vec<char>>,
    pub options: Option<Vec<String>>,
    pub show_length: bool,
    pub verbal_cues: Vec<String>,
    pub field_id: Option<String>,
    pub question_text: Option<String>,
}

/// Client-facing input affordance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ClientInput {
    LetterPool { letters: Vec<String> },
    Options { options: Vec<String> },
}

/// What the client may see of a challenge: no answer, no cues, and no answer
/// length unless the round shows blanks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientChallenge {
    pub challenge_id: String,
    pub kind: ChallengeKind,
    pub image_refs: Vec<String>,
    pub input: ClientInput,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answer_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub question_text: Option<String>,
}

impl Challenge {
    pub fn client_view(&self) -> ClientChallenge {
        let input = match (&self.letter_pool, &self.options) {
            (_, Some(options)) => ClientInput::Options { options: options.clone() },
            (Some(pool), None) => ClientInput::LetterPool { letters: pool.iter().map(|c| c.to_string()).collect() },
            (None, None) => ClientInput::LetterPool { letters: Vec::new() },
        };
        let answer_length = (self.show_length && !self.kind.is_avatar()).then(|| answer_letters(&self.answer).len());
        ClientChallenge {
            challenge_id: self.challenge_id.clone(),
            kind: self.kind,
            image_refs: self.image_refs.clone(),
            input,
            answer_length,
            field_id: self.field_id.clone(),
            question_text: self.question_text.clone(),
        }
    }

    pub fn client_json(&self) -> String {
        serde_json::to_string(&self.client_view()).expect("client view serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub correct: bool,
    pub kind: ChallengeKind,
    pub canonical_answer_revealed: bool,
    /// Recall submission used letters the pool does not hold.
    #[serde(default)]
    pub unspellable: bool,
}

fn check_letter_count(answer: &str) -> Result<usize> {
    let n = answer_letters(answer).len();
    if n == 0 {
        Err(ChallengeError::EmptyAnswer)
    } else if n > LETTER_POOL_SIZE {
        Err(ChallengeError::AnswerTooLong(n))
    } else {
        Ok(n)
    }
}

/// The answer's letters plus uniform A–Z decoys, shuffled; deterministic in
/// `(answer, seed)`.
pub fn build_letter_pool(answer: &str, seed: u64) -> Result<Vec<char>> {
    check_letter_count(answer)?;
    let mut pool = answer_letters(answer);
    let mut stream = SeededStream::new(seed, "letter-pool");
    while pool.len() < LETTER_POOL_SIZE {
        pool.push((b'A' + stream.below(26) as u8) as char);
    }
    stream.shuffle(&mut pool);
    Ok(pool)
}

pub fn build_standard_challenge(entry: &BankEntry, pool_seed: u64, config: &ChallengeConfig) -> Result<Challenge> {
    entry.validate()?;
    let letter_pool = build_letter_pool(&entry.answer, pool_seed)?;
    Ok(Challenge {
        challenge_id: format!("std-{}-{pool_seed:016x}", entry.entry_id),
        kind: ChallengeKind::Standard,
        image_refs: entry.image_refs.clone(),
        answer: entry.answer.clone(),
        letter_pool: Some(letter_pool),
        options: None,
        show_length: config.hide_length_scope != HideLengthScope::All,
        verbal_cues: entry.verbal_cues.clone(),
        field_id: None,
        question_text: None,
    })
}

pub fn build_avatar_challenge(
    profile: &AvatarProfile,
    schema: &AvatarSchema,
    field_id: &str,
    mode: AvatarMode,
    seed: u64,
    config: &ChallengeConfig,
) -> Result<Challenge> {
    config.validate()?;
    let field = schema.field(field_id)?;
    let answer = answer_for(profile, field_id)?.to_string();
    let (letter_pool, options, tag) = match mode {
        AvatarMode::Recall => {
            let pool = build_letter_pool(&answer, derive_seed(seed, field_id))?;
            (Some(pool), None, "rcl")
        }
        AvatarMode::Recognition => {
            let needed = config.option_count;
            if field.answer_pool.len() < needed {
                return Err(ChallengeError::PoolTooSmall { pool: field.answer_pool.len(), needed });
            }
            let target = normalize_answer(&answer);
            let decoys: Vec<&String> =
                field.answer_pool.iter().filter(|a| normalize_answer(a) != target).collect();
            let mut stream = SeededStream::new(seed, &format!("recognition-options/{field_id}"));
            let mut options: Vec<String> = stream
                .sample_indices(decoys.len(), needed - 1)
                .into_iter()
                .map(|i| decoys[i].clone())
                .collect();
            options.push(answer.clone());
            stream.shuffle(&mut options);
            (None, Some(options), "rec")
        }
    };
    Ok(Challenge {
        challenge_id: format!("av-{field_id}-{tag}-{seed:016x}"),
        kind: mode.kind(),
        image_refs: field.image_set.clone(),
        answer,
        letter_pool,
        options,
        show_length: false,
        verbal_cues: field.verbal_cues.clone(),
        field_id: Some(field_id.to_string()),
        question_text: Some(field.question_text.clone()),
    })
}

/// Whether `submission`'s letters fit inside `pool` as a multiset.
pub fn spellable_from(pool: &[char], submission: &str) -> bool {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for c in pool {
        *counts.entry(*c).or_default() += 1;
    }
    for c in answer_letters(submission) {
        match counts.get_mut(&c) {
            Some(n) if *n > 0 => *n -= 1,
            _ => return false,
        }
    }
    true
}

pub fn check_answer(challenge: &Challenge, submission: &str) -> Verdict {
    let unspellable = challenge.kind == ChallengeKind::AvatarRecall
        && !challenge.letter_pool.as_deref().is_some_and(|pool| spellable_from(pool, submission));
    let correct = !unspellable && normalize_answer(submission) == normalize_answer(&challenge.answer);
    Verdict { correct, kind: challenge.kind, canonical_answer_revealed: false, unspellable }
}

/// Abandon a round. Returns the verdict and, when configured, the answer.
pub fn give_up(challenge: &Challenge, config: &ChallengeConfig) -> (Verdict, Option<String>) {
    let verdict = Verdict {
        correct: false,
        kind: challenge.kind,
        canonical_answer_revealed: config.reveal_on_give_up,
        unspellable: false,
    };
    (verdict, config.reveal_on_give_up.then(|| challenge.answer.clone()))
}

fn grant_valid(challenge: &Challenge, grant: Option<&HintGrant>, kind: HintKind, now: Timestamp) -> Result<()> {
    match grant {
        Some(g)
            if g.challenge_id == challenge.challenge_id
                && g.kind == kind
                && now >= g.granted_at
                && now - g.granted_at < HINT_GRANT_TTL_MS =>
        {
            Ok(())
        }
        _ => Err(ChallengeError::NoGrant),
    }
}

/// The four cues, index-aligned with `image_refs`.
pub fn verbal_cues_for(challenge: &Challenge, grant: Option<&HintGrant>, now: Timestamp) -> Result<Vec<String>> {
    grant_valid(challenge, grant, HintKind::VerbalCues, now)?;
    Ok(challenge.verbal_cues.clone())
}

/// The first letter of the answer, for the free stuck-player hint.
pub fn reveal_letter(challenge: &Challenge, grant: Option<&HintGrant>, now: Timestamp) -> Result<char> {
    grant_valid(challenge, grant, HintKind::LetterReveal, now)?;
    answer_letters(&challenge.answer).first().copied().ok_or(ChallengeError::EmptyAnswer)
}
