use std::collections::VecDeque;

use rand::Rng;

use super::{Budget, Meter};
use crate::error::{Error, Result};
use crate::objective::{BinaryVector, QuadraticObjective};
use crate::record::RunRecord;
use crate::rng::{substream, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct SaConfig {
    pub budget: Budget,
    /// Length of the acceptance-rate window.
    pub window: usize,
    /// Gain of the multiplicative inverse-temperature controller.
    pub gain: f64,
    /// Initial inverse temperature; `None` means `1/(d · max|F_ij|)`.
    pub rho0: Option<f64>,
    pub seed: u64,
    pub verbose: bool,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            budget: Budget::Evaluations(1_000_000),
            window: 500,
            gain: 0.01,
            rho0: None,
            seed: 0,
            verbose: false,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::InvalidConfig(format!("gain = {} must be positive", self.gain)));
        }
        if let Some(r) = self.rho0 {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("rho0 = {r} must be positive")));
            }
        }
        Ok(())
    }
}

/// Target acceptance rate after spending the fraction `u` of the budget.
pub fn sa_target(u: f64) -> f64 {
    (1.0 + u).powi(-5)
}

/// One proposal of the annealing chain, as passed to the trace hook.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaStep {
    pub step: u64,
    pub delta: f64,
    /// Inverse temperature used for this proposal.
    pub rho: f64,
    pub u: f64,
    pub accepted: bool,
    /// Acceptance rate over the window ending with this step.
    pub window_rate: f64,
    pub target: f64,
}

/// Single-flip simulated annealing.
pub fn sa_optimize(obj: &QuadraticObjective, cfg: &SaConfig) -> Result<RunRecord> {
    sa_run(obj, cfg, |_| {})
}

/// As [`sa_optimize`], calling `hook` after every proposal.
pub fn sa_run(obj: &QuadraticObjective, cfg: &SaConfig, mut hook: impl FnMut(&SaStep)) -> Result<RunRecord> {
    cfg.validate()?;
    let meter = Meter::new(cfg.budget);
    let d = obj.dim();
    let mut rng = substream(cfg.seed, Purpose::Chain, 0, 0);
    let mut bits = BinaryVector::random(d, &mut rng).as_slice().to_vec();
    let mut f = obj.value(&bits);
    let mut gains = obj.flip_gains(&bits);
    let mut best_bits = bits.clone();
    let mut best_f = f;
    let mut evaluations = 1u64;

    let scale = obj.max_abs_coeff().max(f64::MIN_POSITIVE);
    let mut rho = cfg.rho0.unwrap_or(1.0 / (d as f64 * scale));
    let mut window: VecDeque<bool> = VecDeque::with_capacity(cfg.window);
    let mut accepted_in_window = 0usize;
    let mut step = 0u64;

    while meter.allows(evaluations, 1) {
        step += 1;
        let i = rng.random_range(0..d);
        let delta = gains[i];
        evaluations += 1;
        let u: f64 = rng.random();
        let accepted = u < (rho * delta).exp();
        if accepted {
            bits[i] ^= 1;
            f += delta;
            obj.update_gains_after_flip(&bits, &mut gains, i);
            if f > best_f || (f == best_f && bits < best_bits) {
                best_f = f;
                best_bits.copy_from_slice(&bits);
            }
        }
        if window.len() == cfg.window && window.pop_front() == Some(true) {
            accepted_in_window -= 1;
        }
        window.push_back(accepted);
        accepted_in_window += usize::from(accepted);
        let window_rate = accepted_in_window as f64 / window.len() as f64;
        let target = sa_target(meter.fraction(evaluations).min(1.0));
        hook(&SaStep {
            step,
            delta,
            rho,
            u,
            accepted,
            window_rate,
            target,
        });
        rho *= (cfg.gain * (window_rate - target)).exp();
        if cfg.verbose && step % 100_000 == 0 {
            eprintln!("{step}\t{rho:e}\t{best_f}");
        }
    }

    let best_x = BinaryVector::new(best_bits).expect("bits are binary");
    Ok(RunRecord {
        algorithm: "sa".into(),
        problem: String::new(),
        seed: cfg.seed,
        best_f: obj.value(best_x.as_slice()),
        best_x,
        evaluations,
        wall_seconds: meter.elapsed(),
        iterations: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force;
    use crate::problems::{generate, Distribution, ProblemSpec};

    #[test]
    fn schedule_endpoints() {
        assert_eq!(sa_target(0.0), 1.0);
        assert_eq!(sa_target(1.0), 0.03125);
    }

    #[test]
    fn positive_diagonal_gives_all_ones() {
        let obj = QuadraticObjective::diagonal(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]).unwrap();
        let r = sa_optimize(
            &obj,
            &SaConfig {
                budget: Budget::Evaluations(20_000),
                ..SaConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.best_x, BinaryVector::ones(6));
        assert_eq!(r.best_f, 23.0);
        assert_eq!(r.evaluations, 20_000);
    }

    #[test]
    fn metropolis_rule_respected() {
        let inst = generate(&ProblemSpec::new(20, Distribution::Uniform { c: 100 }, 1)).unwrap();
        let cfg = SaConfig {
            budget: Budget::Evaluations(50_000),
            seed: 3,
            ..SaConfig::default()
        };
        let mut steps = 0;
        sa_run(&inst.obj, &cfg, |s| {
            steps += 1;
            assert_eq!(s.accepted, s.u < 1f64.min((s.rho * s.delta).exp()));
            assert!(s.rho > 0.0);
        })
        .unwrap();
        assert_eq!(steps, 49_999);
    }

    #[test]
    fn cauchy_majority_hits_optimum() {
        let inst = generate(&ProblemSpec::new(15, Distribution::Cauchy { c: 100 }, 7)).unwrap();
        let (_, f_opt) = brute_force(&inst.obj).unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            // A tenth of the 10⁷ budget already suffices at this size.
            let cfg = SaConfig {
                budget: Budget::Evaluations(1_000_000),
                seed,
                ..SaConfig::default()
            };
            hits += usize::from(sa_optimize(&inst.obj, &cfg).unwrap().best_f == f_opt);
        }
        assert!(hits > 50, "{hits}/100");
    }

    #[test]
    fn deterministic() {
        let inst = generate(&ProblemSpec::new(25, Distribution::Uniform { c: 100 }, 2)).unwrap();
        let cfg = SaConfig {
            budget: Budget::Evaluations(30_000),
            seed: 4,
            ..SaConfig::default()
        };
        let a = sa_optimize(&inst.obj, &cfg).unwrap();
        assert!(a.same_outcome(&sa_optimize(&inst.obj, &cfg).unwrap()));
        assert_eq!(a.best_f, inst.obj.value(a.best_x.as_slice()));
    }

    #[test]
    fn wall_clock_budget_terminates() {
        let obj = QuadraticObjective::diagonal(&[1.0, -1.0]).unwrap();
        let r = sa_optimize(
            &obj,
            &SaConfig {
                budget: Budget::Seconds(0.05),
                ..SaConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.best_f, 1.0);
        assert!(r.wall_seconds >= 0.05);
    }

    #[test]
    fn invalid_configs() {
        let obj = QuadraticObjective::diagonal(&[1.0]).unwrap();
        for cfg in [
            SaConfig {
                budget: Budget::Evaluations(0),
                ..SaConfig::default()
            },
            SaConfig {
                budget: Budget::Seconds(-1.0),
                ..SaConfig::default()
            },
            SaConfig {
                window: 0,
                ..SaConfig::default()
            },
            SaConfig {
                rho0: Some(0.0),
                ..SaConfig::default()
            },
        ] {
            assert!(matches!(sa_optimize(&obj, &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
