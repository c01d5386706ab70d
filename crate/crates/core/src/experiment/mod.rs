//! Running algorithm comparisons on problem suites and summarizing them.

mod config;
mod report;
mod suite;

pub use crate::oracle::brute_force;
pub use config::{AlgorithmConfig, ALGORITHMS};
pub use report::{histogram, relative_ratios, HistogramReport};
pub use suite::{
    cell_seed, load_records, ratios_by_algorithm, run_suite, save_records, BestKnown, Pooling, Suite, SuiteAlgorithm,
    SuiteFailure, SuiteOutcome, SuiteProblem,
};
