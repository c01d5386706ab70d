use super::{Budget, Meter};
use crate::error::{Error, Result};
use crate::objective::{BinaryVector, QuadraticObjective};
use crate::record::RunRecord;
use crate::rng::{substream, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct LsConfig {
    pub budget: Budget,
    /// Neighborhood order: all states within Hamming distance `k`.
    pub k: usize,
    pub seed: u64,
    pub verbose: bool,
}

impl Default for LsConfig {
    fn default() -> Self {
        Self {
            budget: Budget::Evaluations(1_000_000),
            k: 1,
            seed: 0,
            verbose: false,
        }
    }
}

impl LsConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.budget.validate()?;
        if self.k == 0 || self.k > dim.max(1) {
            return Err(Error::InvalidConfig(format!("k = {} must lie in 1..={dim}", self.k)));
        }
        Ok(())
    }
}

/// A start or an improving move, as passed to the trace hook.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsEvent {
    pub restart: u64,
    /// 0 for the random start.
    pub step: u64,
    pub f: f64,
    pub evaluations: u64,
}

/// Randomized best-improvement k-opt local search with restarts.
pub fn local_search_kopt(obj: &QuadraticObjective, cfg: &LsConfig) -> Result<RunRecord> {
    local_search_run(obj, cfg, |_| {})
}

/// As [`local_search_kopt`], calling `hook` at every start and move.
pub fn local_search_run(obj: &QuadraticObjective, cfg: &LsConfig, mut hook: impl FnMut(&LsEvent)) -> Result<RunRecord> {
    let d = obj.dim();
    cfg.validate(d)?;
    let meter = Meter::new(cfg.budget);
    let scan_cost = neighborhood_size(d, cfg.k);
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut evaluations = 0u64;
    let mut restarts = 0u64;

    while best.is_none() || meter.allows(evaluations, 1 + scan_cost) {
        let mut rng = substream(cfg.seed, Purpose::Chain, restarts, 0);
        restarts += 1;
        let mut bits = BinaryVector::random(d, &mut rng).as_slice().to_vec();
        let mut f = obj.value(&bits);
        let mut gains = obj.flip_gains(&bits);
        evaluations += 1;
        let mut step = 0u64;
        hook(&LsEvent {
            restart: restarts - 1,
            step,
            f,
            evaluations,
        });
        while meter.allows(evaluations, scan_cost) {
            evaluations += scan_cost;
            let Some((gain, flips)) = best_move(obj, &bits, &gains, cfg.k) else {
                break;
            };
            for &i in &flips {
                bits[i] ^= 1;
                obj.update_gains_after_flip(&bits, &mut gains, i);
            }
            f += gain;
            step += 1;
            hook(&LsEvent {
                restart: restarts - 1,
                step,
                f,
                evaluations,
            });
        }
        let better = match &best {
            None => true,
            Some((b, bf)) => f > *bf || (f == *bf && bits < *b),
        };
        if better {
            best = Some((bits, f));
        }
        if cfg.verbose && restarts % 1000 == 0 {
            eprintln!("{restarts}\t{evaluations}\t{}", best.as_ref().map_or(f, |b| b.1));
        }
    }

    let (bits, _) = best.expect("at least one restart");
    let best_x = BinaryVector::new(bits).expect("bits are binary");
    Ok(RunRecord {
        algorithm: "ls".into(),
        problem: String::new(),
        seed: cfg.seed,
        best_f: obj.value(best_x.as_slice()),
        best_x,
        evaluations,
        wall_seconds: meter.elapsed(),
        iterations: restarts,
    })
}

/// `Σ_{i=1}^{k} C(d, i)`.
fn neighborhood_size(d: usize, k: usize) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for i in 1..=k.min(d) {
        c = c * (d - i + 1) as u64 / i as u64;
        total = total.saturating_add(c);
    }
    total
}

/// Best strictly improving flip set of size at most `k`, ties to the first
/// set in lexicographic order. The gain of flipping `S` is
/// `Σ_{i∈S} g_i + 2 Σ_{i<j∈S} F_ij s_i s_j` with `s = 1 − 2x`.
fn best_move(obj: &QuadraticObjective, bits: &[u8], gains: &[f64], k: usize) -> Option<(f64, Vec<usize>)> {
    struct Search<'a> {
        obj: &'a QuadraticObjective,
        sign: Vec<f64>,
        gains: &'a [f64],
        k: usize,
        chosen: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn extend(&mut self, from: usize, delta: f64) {
            for i in from..self.gains.len() {
                let pair: f64 = self.chosen.iter().map(|&j| self.obj.coeff(i, j) * self.sign[j]).sum();
                let next = delta + self.gains[i] + 2.0 * self.sign[i] * pair;
                self.chosen.push(i);
                if next > self.best.as_ref().map_or(0.0, |b| b.0) {
                    self.best = Some((next, self.chosen.clone()));
                }
                if self.chosen.len() < self.k {
                    self.extend(i + 1, next);
                }
                self.chosen.pop();
            }
        }
    }

    let mut search = Search {
        obj,
        sign: bits.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect(),
        gains,
        k,
        chosen: Vec::with_capacity(k),
        best: None,
    };
    search.extend(0, 0.0);
    search.best
}
