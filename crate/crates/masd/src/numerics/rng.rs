//! Deterministic random streams.
//!
//! Every stochastic choice in the crate flows through [`RngStream`], a thin
//! wrapper over the ChaCha8 counter-based stream cipher (via `rand_chacha`).
//! ChaCha8 is a pure integer permutation of a 256-bit key and a 128-bit
//! block counter, so a given seed produces the identical word sequence on
//! every platform. The (seed, word position) pair fully captures the stream
//! state, which is what checkpoints persist.
//!
//! Floating-point derivations are implemented here explicitly so they stay
//! stable across dependency versions:
//! - `next_f64`: top 53 bits of a u64, scaled by 2^-53 (uniform in [0,1)).
//! - `normal`: Box-Muller transform over two uniform draws.
//! - `index`: Lemire widening-multiply reduction of a u64 draw.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// A seeded, portable, checkpointable random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent stream for a labeled sub-task (evaluation
    /// rollouts, per-seed workers). The derivation is a fixed mix of the
    /// parent seed and the label, not a draw, so it never perturbs the
    /// parent stream.
    pub fn derive(&self, label: u64) -> Self {
        // SplitMix64 finalizer over (seed, label).
        let mut x = self
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(label)
            .wrapping_add(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        Self::seed_from(x)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream position in 32-bit words, for checkpointing.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Restores a stream from its checkpointed (seed, word position).
    pub fn restore(seed: u64, word_pos: u128) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_word_pos(word_pos);
        Self { seed, inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in [0, n). Bias is bounded by n / 2^64.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        mean + std * r * (std::f64::consts::TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::seed_from(42);
        let mut b = RngStream::seed_from(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn restore_resumes_mid_stream() {
        let mut a = RngStream::seed_from(7);
        for _ in 0..123 {
            a.next_f64();
        }
        let mut b = RngStream::restore(a.seed(), a.word_pos());
        for _ in 0..500 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_in_range() {
        let mut rng = RngStream::seed_from(1);
        for _ in 0..10_000 {
            let x = rng.uniform(-1.0, 1.0);
            assert!((-1.0..1.0).contains(&x));
        }
    }

    #[test]
    fn index_covers_support_uniformly() {
        let mut rng = RngStream::seed_from(3);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[rng.index(4)] += 1;
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.01, "frequency {f}");
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::seed_from(5);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let x = rng.normal(0.0, 1.0);
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn derive_is_independent_of_parent_consumption() {
        let parent = RngStream::seed_from(9);
        let d1 = parent.derive(4);
        let mut parent2 = RngStream::seed_from(9);
        parent2.next_u64();
        let d2 = parent2.derive(4);
        let mut d1 = d1;
        let mut d2 = d2;
        for _ in 0..10 {
            assert_eq!(d1.next_u64(), d2.next_u64());
        }
    }
}
