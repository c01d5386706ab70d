//! Comparison optimizers: cross-entropy, simulated annealing and randomized
//! k-opt local search.

mod ce;
mod local_search;
mod sa;

use std::time::Instant;

use crate::error::{Error, Result};

pub use ce::{ce_optimize, CeConfig};
pub use local_search::{local_search_kopt, local_search_run, LsConfig, LsEvent};
pub use sa::{sa_optimize, sa_run, sa_target, SaConfig, SaStep};

/// Resource limit of a sequential search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// Objective evaluations, each single-flip delta counting as one.
    Evaluations(u64),
    /// Wall-clock seconds. Runs under this budget are not reproducible.
    Seconds(f64),
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Budget::Evaluations(0) => Err(Error::InvalidConfig("evaluation budget must be positive".into())),
            Budget::Seconds(s) if !(s > 0.0 && s.is_finite()) => {
                Err(Error::InvalidConfig(format!("time budget {s} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Tracks the spent fraction of a [`Budget`].
pub(crate) struct Meter {
    budget: Budget,
    start: Instant,
}

impl Meter {
    pub(crate) fn new(budget: Budget) -> Self {
        Self {
            budget,
            start: Instant::now(),
        }
    }

    /// Spent fraction in `[0, ∞)` after `evaluations` evaluations.
    pub(crate) fn fraction(&self, evaluations: u64) -> f64 {
        match self.budget {
            Budget::Evaluations(total) => evaluations as f64 / total as f64,
            Budget::Seconds(total) => self.start.elapsed().as_secs_f64() / total,
        }
    }

    /// Whether `cost` more evaluations fit after `evaluations`.
    pub(crate) fn allows(&self, evaluations: u64, cost: u64) -> bool {
        match self.budget {
            Budget::Evaluations(total) => evaluations + cost <= total,
            Budget::Seconds(total) => self.start.elapsed().as_secs_f64() < total,
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
