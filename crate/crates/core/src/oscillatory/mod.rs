//! Weyl sums, torus mean values, restriction ratios and decoupling probes.
//!
//! Randomness is drawn in fixed-size chunks (or strata), each from its own
//! ChaCha stream of the plan's seed, and reduced in a fixed order. Results
//! therefore depend on the seed only, not on the number of worker threads.

pub mod probe;
pub mod sampling;
pub mod sum;
pub mod torus;
pub mod weyl;

use serde::Serialize;

pub use probe::{
    cells_per_side, decoupling_probe, decoupling_probe_with, decoupling_search, CellFunction, ProbeOptions,
    ProbeResult,
};
pub use sampling::{Domain, SamplePlan};
pub use sum::{CompensatedSum, ComplexSum};
pub use torus::torus_mean_mc;
pub use weyl::{e, restriction_ratio, weyl_sum, CoefficientGrid, Nodes};

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}
