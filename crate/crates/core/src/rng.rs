//! Deterministic random streams.
//!
//! Every random quantity in the crate comes from a ChaCha8 stream seeded with a
//! 64-bit value. Seeds for sub-streams (realizations, chains, bootstrap
//! resamples) are derived by folding indices into a parent seed with the
//! SplitMix64 finalizer, so results never depend on the order in which workers
//! pick up tasks.
//!
//! Conversions from raw 64-bit words are done here rather than through `rand`
//! distribution types so that the mapping from seed to sample stays fixed
//! across dependency upgrades:
//!
//! * unit float: `(word >> 11) * 2^-53`, uniform on `[0, 1)`
//! * bounded index: `(word * n) >> 64` on 128-bit integers, uniform on `0..n`

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of indices.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &idx| {
        mix64(acc ^ mix64(idx.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// Thin wrapper over ChaCha8 with the fixed sample conversions above.
#[derive(Clone, Debug)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    #[inline]
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    /// Uniform index in `0..n`. `n` must be positive.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
