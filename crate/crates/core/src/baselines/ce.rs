use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::families::{FamilyKind, FamilyParams, FitOptions, WeightedSample};
use crate::objective::{BinaryVector, QuadraticObjective};
use crate::oracle::MAX_BRUTE_FORCE_DIM;
use crate::record::RunRecord;
use crate::rng::{substream, Purpose};
use crate::sequences::elite_indices;
use crate::smc::{random_components, solve_degenerate, Best};

#[derive(Clone, Debug, PartialEq)]
pub struct CeConfig {
    pub n: usize,
    /// Fraction of each sample discarded; the elite keeps `⌈n(1 − β)⌉`.
    pub beta: f64,
    /// Lag: `θ_t = (1 − τ) θ̂_t + τ θ_{t−1}`.
    pub tau: f64,
    pub family: FamilyKind,
    pub max_iters: usize,
    /// Stop after this many iterations without a new best value.
    pub stagnation_limit: usize,
    pub d_star: usize,
    pub seed: u64,
    pub fit: FitOptions,
    pub verbose: bool,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            beta: 0.8,
            tau: 0.5,
            family: FamilyKind::Logistic,
            max_iters: 1000,
            stagnation_limit: 30,
            d_star: 12,
            seed: 0,
            fit: FitOptions::default(),
            verbose: false,
        }
    }
}

impl CeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n = {} must be at least 2", self.n));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} must lie in (0,1)", self.beta));
        }
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return bad(format!("tau = {} must lie in [0,1)", self.tau));
        }
        if self.stagnation_limit == 0 {
            return bad("stagnation_limit must be at least 1".into());
        }
        if self.d_star > MAX_BRUTE_FORCE_DIM {
            return bad(format!(
                "d_star = {} exceeds the brute-force limit {MAX_BRUTE_FORCE_DIM}",
                self.d_star
            ));
        }
        Ok(())
    }
}

/// Cross-entropy method: sample, keep the elite, refit, blend with the
/// previous parameter.
pub fn ce_optimize(obj: &QuadraticObjective, cfg: &CeConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let d = obj.dim();
    let mut family = FamilyParams::uniform(cfg.family, d);
    let mut best = Best {
        x: BinaryVector::zeros(d),
        f: f64::NEG_INFINITY,
    };
    let mut evaluations = 0u64;
    let mut stagnant = 0usize;
    let mut iteration = 0u64;

    while (iteration as usize) < cfg.max_iters {
        iteration += 1;
        let drawn: Vec<(BinaryVector, f64)> = (0..cfg.n)
            .into_par_iter()
            .map(|k| {
                let (x, _) = family.sample(&mut substream(cfg.seed, Purpose::Sample, iteration, k as u64));
                let f = obj.value(x.as_slice());
                (x, f)
            })
            .collect();
        evaluations += cfg.n as u64;
        let (particles, fvals): (Vec<_>, Vec<_>) = drawn.into_iter().unzip();

        let before = best.f;
        let elite_idx = elite_indices(&fvals, cfg.beta);
        best.offer(&particles[elite_idx[0]], fvals[elite_idx[0]]);
        let elite: Vec<BinaryVector> = elite_idx.iter().map(|&k| particles[k].clone()).collect();
        let sample = WeightedSample::uniform(&elite)?;

        let clip = cfg.fit.clip.unwrap_or_else(|| sample.default_clip());
        let means = sample.means();
        let free = random_components(&means, clip);
        if free.len() < cfg.d_star {
            let (x, f, evals) = solve_degenerate(obj, &means, &free)?;
            evaluations += evals;
            best.offer(&x, f);
            break;
        }

        let fitted = family.fit(&sample, &cfg.fit)?;
        family = fitted.blend(&family, cfg.tau)?;
        if cfg.verbose {
            eprintln!("{iteration}\t{}\t{}", free.len(), best.f);
        }

        if best.f > before {
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= cfg.stagnation_limit {
                break;
            }
        }
    }

    Ok(RunRecord {
        algorithm: "ce".into(),
        problem: String::new(),
        seed: cfg.seed,
        best_f: obj.value(best.x.as_slice()),
        best_x: best.x,
        evaluations,
        wall_seconds: start.elapsed().as_secs_f64(),
        iterations: iteration,
    })
}
