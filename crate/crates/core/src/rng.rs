//! Counter-based random streams.
//!
//! A stream is identified by `(master_seed, stream_id)`. Its key is
//! `master_seed ^ (stream_id * 0x9E3779B97F4A7C15)` (wrapping), and the `i`-th
//! output (`i = 1, 2, ...`) is the SplitMix64 finalizer applied to
//! `key + i * 0x9E3779B97F4A7C15`:
//!
//! ```text
//! z = key + i * GOLDEN
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Uniforms use the top 53 bits: `u = (z >> 11) * 2^-53`, and a Bernoulli(p)
//! draw is `u < p`. All arithmetic is wrapping 64-bit, so the sequence is
//! identical on every platform and easy to port.

use serde::{Deserialize, Serialize};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id, key: master_seed ^ stream_id.wrapping_mul(GOLDEN_GAMMA), counter: 0 }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 64-bit outputs consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    /// A child stream keyed off this one; used to give sub-tasks of a trial
    /// their own independent sequences without coordinating counters.
    pub fn fork(&self, salt: u64) -> Self {
        Self::new(splitmix64_finalize(self.key ^ salt.wrapping_mul(GOLDEN_GAMMA)), self.stream_id)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        splitmix64_finalize(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n` by rejection on the top bits (no modulo bias).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniformly random subset of `0..n` of size `k`, returned sorted.
    pub fn choose_subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut out = pool[..k].to_vec();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // SplitMix64 seeded with 0: the first outputs of the reference generator.
        let mut s = RngStream::new(0, 0);
        assert_eq!(s.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(s.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(s.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..8).scan(RngStream::new(42, 3), |s, _| Some(s.next_u64())).collect();
        let b: Vec<u64> = (0..8).scan(RngStream::new(42, 3), |s, _| Some(s.next_u64())).collect();
        let c: Vec<u64> = (0..8).scan(RngStream::new(42, 4), |s, _| Some(s.next_u64())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_in_unit_interval_and_bernoulli_extremes() {
        let mut s = RngStream::new(7, 0);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(s.bernoulli(1.0));
            assert!(!s.bernoulli(0.0));
        }
    }

    #[test]
    fn subset_has_requested_size() {
        let mut s = RngStream::new(1, 1);
        let sub = s.choose_subset(50, 17);
        assert_eq!(sub.len(), 17);
        assert!(sub.windows(2).all(|w| w[0] < w[1]));
        assert!(sub.iter().all(|&i| i < 50));
    }
}
