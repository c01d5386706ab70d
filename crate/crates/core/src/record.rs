use serde::{Deserialize, Serialize};

use crate::objective::BinaryVector;

/// Outcome of one optimizer run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub best_x: BinaryVector,
    pub best_f: f64,
    /// Objective evaluations, counting each single-flip delta as one.
    pub evaluations: u64,
    pub wall_seconds: f64,
    pub iterations: u64,
}

impl RunRecord {
    /// Equality ignoring `wall_seconds`, the only field that depends on the
    /// machine rather than on the inputs.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        self.algorithm == other.algorithm
            && self.problem == other.problem
            && self.seed == other.seed
            && self.best_x == other.best_x
            && self.best_f.to_bits() == other.best_f.to_bits()
            && self.evaluations == other.evaluations
            && self.iterations == other.iterations
    }
}
