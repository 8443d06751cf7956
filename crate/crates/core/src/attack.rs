//! Monte Carlo guessing attacker against k-of-m security questions.
//!
//! Each trial draws a victim profile, then the attacker submits up to
//! `budget` distinct joint guesses in descending assumed popularity. Guesses
//! that tie in popularity are ordered uniformly at random, so against a
//! uniform model the attacker is exactly the one the closed form describes.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avatar::AvatarSchema;
use crate::fallback::{AuthError, AuthPolicy};
use crate::rng::SeededStream;

const TRIALS_PER_CHUNK: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AttackerModel {
    /// System-generated answers: every candidate equally likely.
    Uniform,
    /// User-chosen answers: the candidate at rank r has weight 1/r^s.
    Zipf { s: f64 },
}

impl std::str::FromStr for AttackerModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(AttackerModel::Uniform),
            "zipf" => Ok(AttackerModel::Zipf { s: 1.0 }),
            other => other
                .strip_prefix("zipf:")
                .and_then(|x| x.parse().ok())
                .map(|s| AttackerModel::Zipf { s })
                .ok_or_else(|| format!("unknown attacker model `{other}` (uniform|zipf|zipf:S)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("invalid attack setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub standard_error: f64,
}

impl AttackResult {
    fn new(trials: u64, successes: u64) -> Self {
        let rate = successes as f64 / trials as f64;
        Self { trials, successes, rate, standard_error: (rate * (1.0 - rate) / trials as f64).sqrt() }
    }
}

/// Attack a question set from `schema` under `policy.k`.
pub fn simulate_guessing_attack<S: AsRef<str>>(
    schema: &AvatarSchema,
    question_set: &[S],
    policy: &AuthPolicy,
    model: AttackerModel,
    budget: u64,
    trials: u64,
    seed: u64,
) -> Result<AttackResult, AttackError> {
    let pools = question_set
        .iter()
        .map(|f| Ok(schema.field(f.as_ref())?.answer_pool.len() as u64))
        .collect::<Result<Vec<_>, AuthError>>()?;
    simulate_pool_attack(&pools, policy.k, model, budget, trials, seed)
}

/// Attack independent questions with the given pool sizes.
pub fn simulate_pool_attack(
    pools: &[u64],
    k: usize,
    model: AttackerModel,
    budget: u64,
    trials: u64,
    seed: u64,
) -> Result<AttackResult, AttackError> {
    if trials == 0 {
        return Err(AttackError::NoTrials);
    }
    if pools.is_empty() || k == 0 || k > pools.len() || pools.iter().any(|&n| n == 0 || n > u64::from(u32::MAX)) {
        return Err(AttackError::Invalid(format!("k={k} over pools {pools:?}")));
    }
    if let AttackerModel::Zipf { s } = model {
        if !(s.is_finite() && s > 0.0) {
            return Err(AttackError::Invalid(format!("zipf exponent {s}")));
        }
    }
    let space = pools.iter().try_fold(1u64, |acc, &n| acc.checked_mul(n));
    let budget = space.map_or(budget, |n| budget.min(n));
    if budget == 0 {
        return Ok(AttackResult::new(trials, 0));
    }
    let attack = Attack::new(pools, k, model, budget as usize, space)?;

    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let successes = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = TRIALS_PER_CHUNK.min(trials - c * TRIALS_PER_CHUNK);
            let mut stream = SeededStream::new(seed, &format!("attack/{c}"));
            let mut scratch = Vec::new();
            (0..n).filter(|_| attack.trial(&mut stream, &mut scratch)).count() as u64
        })
        .sum();
    Ok(AttackResult::new(trials, successes))
}

struct Attack<'a> {
    pools: &'a [u64],
    k: usize,
    budget: usize,
    /// Per-field cumulative weights for Zipf victims.
    cdfs: Option<Vec<Vec<f64>>>,
    /// Zipf guesses: whole tie groups always tried, then a random subset of
    /// the last group.
    fixed: Vec<Vec<u32>>,
    partial: Vec<Vec<u32>>,
}

impl<'a> Attack<'a> {
    fn new(pools: &'a [u64], k: usize, model: AttackerModel, budget: usize, space: Option<u64>) -> Result<Self, AttackError> {
        let mut attack = Attack { pools, k, budget, cdfs: None, fixed: Vec::new(), partial: Vec::new() };
        let AttackerModel::Zipf { s } = model else {
            if space.is_none() {
                return Err(AttackError::Invalid("joint answer space too large".into()));
            }
            return Ok(attack);
        };
        attack.cdfs = Some(
            pools
                .iter()
                .map(|&n| {
                    let mut acc = 0.0;
                    let mut cdf: Vec<f64> = (1..=n)
                        .map(|r| {
                            acc += (r as f64).powf(-s);
                            acc
                        })
                        .collect();
                    let total = acc;
                    cdf.iter_mut().for_each(|c| *c /= total);
                    cdf
                })
                .collect(),
        );
        let (fixed, partial) = popularity_groups(pools, budget);
        attack.fixed = fixed;
        attack.partial = partial;
        Ok(attack)
    }

    fn hits(&self, guess: &[u32], victim: &[u32]) -> bool {
        guess.iter().zip(victim).filter(|(g, v)| g == v).count() >= self.k
    }

    fn trial(&self, stream: &mut SeededStream, scratch: &mut Vec<u32>) -> bool {
        let m = self.pools.len();
        match &self.cdfs {
            None => {
                let victim: Vec<u32> = self.pools.iter().map(|&n| stream.below(n) as u32).collect();
                // Distinct uniform guesses, drawn by rejection.
                scratch.clear();
                let mut guess = vec![0u32; m];
                for _ in 0..self.budget {
                    loop {
                        for (g, &n) in guess.iter_mut().zip(self.pools) {
                            *g = stream.below(n) as u32;
                        }
                        if !scratch.chunks(m).any(|seen| seen == guess.as_slice()) {
                            break;
                        }
                    }
                    if self.hits(&guess, &victim) {
                        return true;
                    }
                    scratch.extend_from_slice(&guess);
                }
                false
            }
            Some(cdfs) => {
                let victim: Vec<u32> = cdfs
                    .iter()
                    .map(|cdf| {
                        let u = stream.unit();
                        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u32
                    })
                    .collect();
                if self.fixed.iter().any(|g| self.hits(g, &victim)) {
                    return true;
                }
                let need = self.budget - self.fixed.len();
                stream
                    .sample_indices(self.partial.len(), need)
                    .into_iter()
                    .any(|i| self.hits(&self.partial[i], &victim))
            }
        }
    }
}

/// Joint answers in ascending product of (1-based) ranks, which is descending
/// Zipf popularity for any exponent. Returns the tie groups fully covered by
/// `budget` and the group that is only partly covered.
fn popularity_groups(pools: &[u64], budget: usize) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let product = |t: &[u32]| t.iter().map(|&r| u128::from(r) + 1).product::<u128>();
    let start = vec![0u32; pools.len()];
    let mut heap = BinaryHeap::from([Reverse((1u128, start.clone()))]);
    let mut seen = HashSet::from([start]);
    let mut fixed = Vec::new();
    while let Some(Reverse((p, first))) = heap.pop() {
        let mut group = vec![first];
        while heap.peek().is_some_and(|Reverse((q, _))| *q == p) {
            group.push(heap.pop().expect("peeked").0 .1);
        }
        for tuple in &group {
            for i in 0..tuple.len() {
                if u64::from(tuple[i]) + 1 < pools[i] {
                    let mut next = tuple.clone();
                    next[i] += 1;
                    if seen.insert(next.clone()) {
                        heap.push(Reverse((product(&next), next)));
                    }
                }
            }
        }
        if fixed.len() + group.len() > budget {
            return (fixed, group);
        }
        fixed.extend(group);
        if fixed.len() == budget {
            break;
        }
    }
    (fixed, Vec::new())
}
