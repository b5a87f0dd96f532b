//! Percolation of words on Z^d: word reachability, the Wierman coupling,
//! oriented exploration and block renormalization, plus a Monte Carlo harness.

#![allow(clippy::type_complexity)]

pub mod bits;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod oriented;
pub mod reach;
pub mod renorm;
pub mod rng;
pub mod stats;
pub mod wierman;
pub mod word;

pub use bits::BitSet;
pub use config::{enumerate_configs, flip_colors, sample, Configuration, Provenance};
pub use error::{Error, Result};
pub use experiment::{run, run_and_write, Experiment, ExperimentResult, ExperimentSpec, NamedEstimate, WordArg};
pub use geometry::{
    block_constant, inner_boundary, macro_box, macro_cell, macro_face, Interval, Lattice, LatticePoint, MacroVertex,
    Membership, Region, RegionKind, SlabDomain,
};
pub use oriented::{
    accordion_embed, crossing_stat, domination_probe, explore, oriented_reach, reach_mask, xi_5n, xi_window,
    AccordionMap, CrossingParams, CrossingReport, DominationParams, DominationReport, ExplorationState, OrientedConfig,
    OrientedGraph, OrientedWindow, SlabBlock,
};
pub use reach::{
    exact_word_reach, one_connected_set, reach_targets, relaxed_word_reach, sees_all_words, word_reach, ReachOptions,
    ReachResult, SearchMode, Source, SourceSet, TargetIndex, Witness,
};
pub use renorm::{
    event_emn, good_event, is_delta_seed, macro_exploration, seed_sets_from, EmnOutcome, MacroExplorationReport,
    RenormParams, SeedSet,
};
pub use rng::RngStream;
pub use stats::{wilson, Estimate};
pub use wierman::{verify_coupling, wierman_couple, CoupledPair, CouplingVerdict, SourceConvention};
pub use word::{enumerate_words, sample_word, Word, WordGenerator};
