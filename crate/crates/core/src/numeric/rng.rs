//! Seeded random stream.
//!
//! Algorithm: **ChaCha8** as implemented by `rand_chacha` 0.10, seeded via
//! `SeedableRng::seed_from_u64`. Stream version tag: [`RngStream::ALGORITHM`].
//! ChaCha is counter-based and its output is specified byte-for-byte, so a
//! seed yields the same sequence on every platform.
//!
//! Derived values are computed here rather than through `rand` distributions
//! so they cannot drift with crate upgrades:
//!
//! - uniform: top 53 bits of a `u64`, scaled to `[0, 1)`;
//! - normal: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`, one normal per
//!   two uniforms;
//! - bounded integers: rejection sampling on the `u64` output (unbiased);
//! - shuffle: Fisher-Yates from the last index down.

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Single-owner deterministic random stream. Use [`RngStream::derive`] to
/// hand independent substreams to concurrent consumers.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha8/rand_chacha-0.10/v1";

    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Seed of the substream keyed by `key`. Depends only on this stream's
    /// seed, never on how much of it was consumed.
    pub fn derive_seed(seed: u64, key: u64) -> u64 {
        splitmix64(seed ^ splitmix64(key.wrapping_add(GOLDEN)))
    }

    pub fn derive(&self, key: u64) -> RngStream {
        RngStream::new(Self::derive_seed(self.seed, key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

pub fn rng_uniform(stream: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| stream.uniform()).collect()
}

pub fn rng_normal(stream: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| stream.normal()).collect()
}

/// Returns a shuffled copy of `items`.
pub fn rng_shuffle<T: Clone>(stream: &mut RngStream, items: &[T]) -> Vec<T> {
    let mut out = items.to_vec();
    stream.shuffle(&mut out);
    out
}
