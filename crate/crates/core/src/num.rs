//! Scalar abstractions.
//!
//! Everything numeric in the crate (entropy accounting, the forgetting
//! model, guessing probabilities) is written against these traits so it can
//! run in `f32`, `f64`, or, for the closed-form guessing probability, exact
//! rational arithmetic.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, One, ToPrimitive, Zero};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A probability-valued field. Implemented for the float types and for
/// [`BigRational`], which gives an exact route for closed-form checks.
pub trait Probability: Num + Clone + PartialOrd + Debug {
    fn from_u128(n: u128) -> Self;
    fn to_f64(&self) -> f64;
}

impl Probability for f32 {
    fn from_u128(n: u128) -> Self {
        n as f32
    }
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Probability for f64 {
    fn from_u128(n: u128) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for BigRational {
    fn from_u128(n: u128) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        let num = self.numer().to_f64().unwrap_or(f64::NAN);
        let den = self.denom().to_f64().unwrap_or(f64::NAN);
        if num.is_finite() && den.is_finite() {
            return num / den;
        }
        // Very large numerator/denominator: scale both down first.
        let shift = self.denom().bits().saturating_sub(512);
        let num = (self.numer() >> shift).to_f64().unwrap_or(0.0);
        let den = (self.denom() >> shift).to_f64().unwrap_or(1.0);
        num / den
    }
}

/// Clamp into `[0, 1]`.
pub fn clamp_unit<T: Probability>(p: T) -> T {
    if p < T::zero() {
        T::zero()
    } else if p > T::one() {
        T::one()
    } else {
        p
    }
}

#[allow(dead_code)]
pub(crate) fn is_unit<T: Zero + One + PartialOrd>(p: &T) -> bool {
    *p >= T::zero() && *p <= T::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_to_f64_handles_huge_terms() {
        let big: BigInt = BigInt::from(1u8) << 2000usize;
        let r = BigRational::new(big.clone(), big * 4);
        assert!((Probability::to_f64(&r) - 0.25).abs() < 1e-12);
    }
}
