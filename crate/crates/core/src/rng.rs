//! Counter-based deterministic randomness.
//!
//! Every random draw is a pure function of a 64-bit seed and a 64-bit counter,
//! so matrices can be filled in any order (or in parallel) and still come out
//! bit-identical. Uniforms are produced by the SplitMix64 finalizer applied to
//! `key + counter * GOLDEN`; Gaussians use the Box–Muller transform on pairs of
//! consecutive uniforms.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for all randomized operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    /// Independent child seed for a named sub-stream of one computation.
    pub fn derive(self, stream: u64) -> RngSeed {
        RngSeed(mix64(self.0 ^ mix64(stream.wrapping_add(GOLDEN))))
    }

    /// Seed `offset` positions after this one (`base_seed + trial_index`).
    pub fn offset(self, offset: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(offset))
    }

    #[inline]
    fn key(self) -> u64 {
        mix64(self.0 ^ 0x6a09_e667_f3bc_c909)
    }

    /// Raw 64-bit output at position `counter`.
    #[inline]
    pub fn u64_at(self, counter: u64) -> u64 {
        mix64(self.key().wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in (0, 1] at position `counter`.
    #[inline]
    pub fn uniform_at(self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal at position `index`. Indices `2p` and `2p + 1` share
    /// the uniform pair `(2p, 2p + 1)` and take the cosine and sine branch.
    #[inline]
    pub fn standard_normal_at(self, index: u64) -> f64 {
        let pair = index / 2;
        let u1 = self.uniform_at(2 * pair);
        let u2 = self.uniform_at(2 * pair + 1);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        if index.is_multiple_of(2) {
            radius * angle.cos()
        } else {
            radius * angle.sin()
        }
    }

    pub fn stream(self) -> RngStream {
        RngStream { seed: self, counter: 0 }
    }
}

/// Sequential view over a seed's counter space.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: RngSeed,
    counter: u64,
}

impl RngStream {
    pub fn next_u64(&mut self) -> u64 {
        let v = self.seed.u64_at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in (0, 1].
    pub fn next_uniform(&mut self) -> f64 {
        let v = self.seed.uniform_at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            let wide = (x as u128) * (bound as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_range() {
        let s = RngSeed(7);
        for c in 0..10_000 {
            let u = s.uniform_at(c);
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn derive_separates_streams() {
        let s = RngSeed(1);
        assert_ne!(s.derive(0), s.derive(1));
        assert_ne!(s.derive(0).u64_at(0), s.u64_at(0));
        assert_eq!(s.derive(3), RngSeed(1).derive(3));
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut st = RngSeed(3).stream();
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = st.below(7) as usize;
            seen[v] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }
}
