//! Password reset through avatar security questions.
//!
//! A reset asks `m` questions and grants access when at least `k` answers
//! match. The question set is gated on its entropy, attempts are throttled
//! per day and locked after a run of failures, and every verification is
//! appended to the player's audit history.

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avatar::{question_set_entropy, AvatarError, AvatarProfile, AvatarSchema};
use crate::normalize::normalize_answer;
use crate::num::{clamp_unit, Probability};
use crate::rng::SeededStream;
use crate::time::Timestamp;

/// Reset sessions expire this long after issue.
pub const RESET_SESSION_TTL_MS: i64 = 15 * 60 * 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuthError {
    #[error("no question subset reaches {0} bits")]
    EntropyUnattainable(String),
    #[error("unknown or expired reset session")]
    SessionUnknown,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Avatar(#[from] AvatarError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthPolicy {
    /// Questions asked.
    pub m: usize,
    /// Correct answers required.
    pub k: usize,
    pub max_attempts_per_day: u32,
    /// Consecutive failed resets before lockout.
    pub lockout_after: u32,
    pub min_entropy_bits: f64,
}

impl Default for AuthPolicy {
    fn default() -> Self {
        AuthPolicy { m: 3, k: 3, max_attempts_per_day: 3, lockout_after: 10, min_entropy_bits: 15.0 }
    }
}

impl AuthPolicy {
    pub fn validate(&self, schema: &AvatarSchema) -> Result<(), AuthError> {
        if self.k < 1 || self.k > self.m || self.m > schema.fields.len() {
            return Err(AuthError::InvalidPolicy(format!(
                "need 1 ≤ k ≤ m ≤ {}, got k={} m={}",
                schema.fields.len(),
                self.k,
                self.m
            )));
        }
        if self.min_entropy_bits.is_nan() || self.min_entropy_bits < 0.0 {
            return Err(AuthError::InvalidPolicy("min_entropy_bits must be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuthOutcome {
    Granted,
    Denied,
    Locked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthAttempt {
    pub timestamp: Timestamp,
    pub question_set: Vec<String>,
    pub answers_given: Vec<String>,
    pub outcome: AuthOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSession {
    pub token: String,
    pub question_set: Vec<String>,
    pub issued_at: Timestamp,
}

impl ResetSession {
    pub fn expired(&self, now: Timestamp) -> bool {
        now - self.issued_at >= RESET_SESSION_TTL_MS || now < self.issued_at
    }
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

/// A seeded-random `m`-subset of the schema's fields whose summed entropy meets
/// the policy. Fields are returned in schema order.
pub fn select_questions(
    profile: &AvatarProfile,
    schema: &AvatarSchema,
    policy: &AuthPolicy,
    seed: u64,
) -> Result<Vec<String>, AuthError> {
    policy.validate(schema)?;
    let qualifying: Vec<Vec<String>> = combinations(schema.fields.len(), policy.m)
        .into_iter()
        .map(|idx| idx.into_iter().map(|i| schema.fields[i].field_id.clone()).collect::<Vec<_>>())
        .filter(|ids| profile_has_all(profile, ids))
        .filter(|ids| {
            question_set_entropy::<f64, _>(schema, ids).is_ok_and(|bits| bits >= policy.min_entropy_bits)
        })
        .collect();
    if qualifying.is_empty() {
        return Err(AuthError::EntropyUnattainable(format!("{}", policy.min_entropy_bits)));
    }
    let mut stream = SeededStream::new(seed, &format!("question-set/{}", profile.profile_id));
    Ok(qualifying[stream.index(qualifying.len())].clone())
}

fn profile_has_all(profile: &AvatarProfile, ids: &[String]) -> bool {
    ids.iter().all(|id| profile.assignments.contains_key(id))
}

pub fn issue_reset(
    profile: &AvatarProfile,
    schema: &AvatarSchema,
    policy: &AuthPolicy,
    seed: u64,
    now: Timestamp,
) -> Result<ResetSession, AuthError> {
    let question_set = select_questions(profile, schema, policy, seed)?;
    let token = format!("{:016x}", SeededStream::new(seed, &format!("reset-token/{}", now.millis())).next_u64());
    Ok(ResetSession { token, question_set, issued_at: now })
}

/// Failed resets since the last grant (locked attempts are not judged and do not count).
pub fn consecutive_failures(history: &[AuthAttempt]) -> u32 {
    let mut n = 0;
    for attempt in history.iter().rev() {
        match attempt.outcome {
            AuthOutcome::Granted => break,
            AuthOutcome::Denied => n += 1,
            AuthOutcome::Locked => {}
        }
    }
    n
}

/// Judged (non-locked) attempts on `now`'s local day.
pub fn judged_attempts_today(history: &[AuthAttempt], now: Timestamp, tz: Tz) -> u32 {
    let today = now.local_date(tz);
    history
        .iter()
        .filter(|a| a.outcome != AuthOutcome::Locked && a.timestamp.local_date(tz) == today)
        .count() as u32
}

/// Judge a reset attempt. Lockout is checked first; every call appends one
/// record to `history`, including `SessionUnknown` calls, which are logged as
/// locked-out (unjudged) attempts.
#[allow(clippy::too_many_arguments)]
pub fn verify_reset(
    profile: &AvatarProfile,
    session: Option<&ResetSession>,
    answers: &[String],
    policy: &AuthPolicy,
    history: &mut Vec<AuthAttempt>,
    tz: Tz,
    now: Timestamp,
) -> Result<AuthOutcome, AuthError> {
    let Some(session) = session.filter(|s| !s.expired(now)) else {
        history.push(AuthAttempt {
            timestamp: now,
            question_set: Vec::new(),
            answers_given: answers.to_vec(),
            outcome: AuthOutcome::Locked,
        });
        return Err(AuthError::SessionUnknown);
    };
    let locked = judged_attempts_today(history, now, tz) >= policy.max_attempts_per_day
        || consecutive_failures(history) >= policy.lockout_after;
    let outcome = if locked {
        AuthOutcome::Locked
    } else {
        let matches = session
            .question_set
            .iter()
            .zip(answers.iter().map(String::as_str).chain(std::iter::repeat("")))
            .filter(|(field, given)| {
                profile
                    .assignments
                    .get(*field)
                    .is_some_and(|truth| normalize_answer(truth) == normalize_answer(given))
            })
            .count();
        let needed = policy.k.min(session.question_set.len());
        if matches >= needed {
            AuthOutcome::Granted
        } else {
            AuthOutcome::Denied
        }
    };
    history.push(AuthAttempt {
        timestamp: now,
        question_set: session.question_set.clone(),
        answers_given: answers.to_vec(),
        outcome,
    });
    Ok(outcome)
}

/// Number of joint answers that match a fixed victim answer in at least `k`
/// of the fields with the given pool sizes.
pub fn near_match_count(pool_sizes: &[u64], k: usize) -> u128 {
    // dp[j]: answers agreeing with the victim on exactly j fields so far
    let mut dp = vec![0u128; pool_sizes.len() + 1];
    dp[0] = 1;
    for (i, n) in pool_sizes.iter().enumerate() {
        for j in (0..=i + 1).rev() {
            let miss = dp[j] * u128::from(n.saturating_sub(1));
            let hit = if j > 0 { dp[j - 1] } else { 0 };
            dp[j] = miss + hit;
        }
    }
    dp[k.min(pool_sizes.len())..].iter().sum()
}

/// Closed-form success probability of an attacker who submits `budget`
/// distinct joint guesses drawn uniformly from the answer space of
/// `pool_sizes`, needing `k` matching fields in one guess:
/// `1 - C(N - G, B) / C(N, B)` with `N` the joint space and `G` the number of
/// `k`-near matches. For `k = m` this reduces to `min(1, B / N)`.
pub fn success_probability_for_pools<T: Probability>(pool_sizes: &[u64], k: usize, budget: u64) -> T {
    if budget == 0 || pool_sizes.is_empty() {
        return if pool_sizes.is_empty() && budget > 0 { T::one() } else { T::zero() };
    }
    let total: u128 = pool_sizes.iter().map(|n| u128::from(*n)).product();
    let good = near_match_count(pool_sizes, k.max(1));
    let bad = total - good;
    let budget = u128::from(budget);
    if budget > bad {
        return T::one();
    }
    let mut miss = T::one();
    for t in 0..budget {
        miss = miss * T::from_u128(bad - t) / T::from_u128(total - t);
    }
    clamp_unit(T::one() - miss)
}

/// [`success_probability_for_pools`] over the schema's pool sizes for `question_set`.
pub fn guess_success_probability<T: Probability, S: AsRef<str>>(
    schema: &AvatarSchema,
    question_set: &[S],
    policy: &AuthPolicy,
    attacker_budget: u64,
) -> Result<T, AuthError> {
    let sizes = question_set
        .iter()
        .map(|id| schema.field(id.as_ref()).map(|f| f.answer_pool.len() as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let k = policy.k.min(sizes.len());
    Ok(success_probability_for_pools(&sizes, k, attacker_budget))
}
