//! Portable seeded randomness.
//!
//! Profiles, letter pools and option orders must reproduce bit-for-bit in any
//! implementation, so nothing here relies on the platform default RNG or on a
//! library's unspecified sampling routine. The full algorithm is:
//!
//! 1. **Label mixing.** A stream for `(seed, label)` starts from
//!    `splitmix64(seed ^ fnv1a64(label))`, where `fnv1a64` is 64-bit FNV-1a over
//!    the label's UTF-8 bytes and `splitmix64` is the standard SplitMix64
//!    finalizer step (Steele, Lea & Flood).
//! 2. **Key expansion.** Four successive SplitMix64 outputs from that state,
//!    each written little-endian, form the 32-byte ChaCha8 key (nonce zero).
//! 3. **Bounded draws.** `below(n)` draws `u64` words and rejects any
//!    `x < (2^64 mod n)`, then returns `x mod n` (unbiased).
//! 4. **Unit floats.** `(x >> 11) * 2^-53`.
//! 5. **Shuffles.** Fisher–Yates from the last index down, `j = below(i + 1)`.
//!
//! Because the label carries the field id, adding a field to a schema never
//! perturbs the draws of the other fields.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed with a textual label into a new 64-bit seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut s = seed ^ fnv1a64(label.as_bytes());
    splitmix64(&mut s)
}

/// A labelled deterministic random stream.
#[derive(Debug, Clone)]
pub struct SeededStream {
    inner: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64, label: &str) -> Self {
        Self::from_u64(derive_seed(seed, label))
    }

    pub fn from_u64(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        SeededStream { inner: ChaCha8Rng::from_seed(key) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n` in selection order (partial Fisher–Yates).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }
}
