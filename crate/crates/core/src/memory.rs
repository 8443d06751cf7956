//! Exponential forgetting model for simulated players.
//!
//! Each field has a half-life `h` and an encoding time. Recall probability
//! after `t` hours since encoding is `2^(-t/h)`. Rehearsal rescales the
//! half-life (growth on success, failure factor on a miss) but leaves the
//! encoding anchor alone, so neutral factors reproduce pure decay exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::challenge::AvatarMode;
use crate::num::Real;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryParams<T> {
    pub initial_half_life_hours: T,
    /// Half-life multiplier per successful rehearsal.
    pub growth_factor: T,
    /// Half-life multiplier per failed rehearsal, in (0, 1].
    pub failure_factor: T,
    /// Multiplier on recall probability for recognition answers, capped at 1.
    pub recognition_boost: T,
}

impl<T: Real> Default for MemoryParams<T> {
    fn default() -> Self {
        Self {
            initial_half_life_hours: T::lit(24.0),
            growth_factor: T::lit(2.0),
            failure_factor: T::lit(0.5),
            recognition_boost: T::lit(2.0),
        }
    }
}

impl<T: Real> MemoryParams<T> {
    /// Parameters under which rehearsal has no effect.
    pub fn neutral(initial_half_life_hours: T) -> Self {
        Self {
            initial_half_life_hours,
            growth_factor: T::one(),
            failure_factor: T::one(),
            recognition_boost: T::lit(2.0),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: T| v.is_finite();
        if !ok(self.initial_half_life_hours) || self.initial_half_life_hours <= T::zero() {
            return Err("initial_half_life_hours must be positive".into());
        }
        // A growth factor of exactly 1 is allowed so rehearsal can be switched off.
        if !ok(self.growth_factor) || self.growth_factor < T::one() {
            return Err("growth_factor must be ≥ 1".into());
        }
        if !ok(self.failure_factor) || self.failure_factor <= T::zero() || self.failure_factor > T::one() {
            return Err("failure_factor must be in (0, 1]".into());
        }
        if !ok(self.recognition_boost) || self.recognition_boost < T::one() {
            return Err("recognition_boost must be ≥ 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMemory<T> {
    pub half_life_hours: T,
    pub encoded_at: Timestamp,
    pub last_rehearsal: Timestamp,
}

impl<T: Real> FieldMemory<T> {
    pub fn new(params: &MemoryParams<T>, at: Timestamp) -> Self {
        Self { half_life_hours: params.initial_half_life_hours, encoded_at: at, last_rehearsal: at }
    }

    pub fn rehearse(&mut self, success: bool, params: &MemoryParams<T>, now: Timestamp) {
        let factor = if success { params.growth_factor } else { params.failure_factor };
        self.half_life_hours = self.half_life_hours * factor;
        self.last_rehearsal = self.last_rehearsal.max(now);
    }
}

/// Probability of retrieving a field at `now`.
pub fn recall_probability<T: Real>(mem: &FieldMemory<T>, now: Timestamp, mode: AvatarMode, params: &MemoryParams<T>) -> T {
    let hours = T::lit(now.hours_since(mem.encoded_at).max(0.0));
    let p = T::lit(2.0).powf(-hours / mem.half_life_hours);
    match mode {
        AvatarMode::Recall => p,
        AvatarMode::Recognition => (p * params.recognition_boost).min(T::one()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryState<T> {
    pub fields: BTreeMap<String, FieldMemory<T>>,
}

impl<T: Real> MemoryState<T> {
    pub fn encode<'a>(field_ids: impl IntoIterator<Item = &'a str>, params: &MemoryParams<T>, at: Timestamp) -> Self {
        Self { fields: field_ids.into_iter().map(|f| (f.to_string(), FieldMemory::new(params, at))).collect() }
    }

    /// Mean unassisted recall probability over all fields.
    pub fn mean_recall(&self, now: Timestamp, params: &MemoryParams<T>) -> T {
        if self.fields.is_empty() {
            return T::zero();
        }
        let total = self
            .fields
            .values()
            .fold(T::zero(), |acc, m| acc + recall_probability(m, now, AvatarMode::Recall, params));
        total / T::from_count(self.fields.len())
    }
}
