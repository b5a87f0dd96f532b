//! Shared fixtures for the criterion benchmarks.

use wordperc_core::{sample, Configuration, LatticePoint, Region, RngStream, SourceSet, Word, WordGenerator};

/// A `P_p` configuration on `B_m` in dimension `d`.
pub fn ball_config(d: usize, m: i64, p: f64, seed: u64) -> Configuration {
    let r = Region::ball(d, m).expect("ball");
    sample(&r, p, &mut RngStream::new(seed, 0)).expect("sample")
}

pub fn origin_source(d: usize) -> SourceSet {
    SourceSet::single(LatticePoint::new(&vec![0; d]), 0)
}

pub fn alternating(len: usize) -> Word {
    WordGenerator::Alternating.prefix(len).expect("word")
}
