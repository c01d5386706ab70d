//! Sequential Monte Carlo optimizer.
//!
//! A particle system is moved along a sequence of distributions that
//! concentrate on the maximizers of `f`: reweight by an adaptive step, fit a
//! parametric proposal to the weighted system, resample, and move the
//! particles with a Metropolis–Hastings kernel that leaves the current target
//! invariant. Every random draw made for particle `k` comes from its own
//! substream, so runs are bit-identical for any number of worker threads.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::families::{FamilyKind, FamilyParams, FitOptions, WeightedSample};
use crate::objective::{BinaryVector, QuadraticObjective};
use crate::oracle::{brute_force_restricted, MAX_BRUTE_FORCE_DIM};
use crate::record::RunRecord;
use crate::rng::{substream, Purpose, StreamRng};
use crate::sequences::{ess, find_step_length, SequenceKind, SequenceTag, StepOptions};

/// Transition kernel used in the move step.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// Independent proposals from a logistic conditionals fit.
    AdaptiveLogistic,
    /// Independent proposals from a product fit.
    AdaptiveProduct,
    /// Flip a uniform `k`-subset, `k` drawn with probability `p[k − 1]`.
    Symmetric(Vec<f64>),
}

impl Kernel {
    /// The symmetric kernel that always flips exactly one bit.
    pub fn single_flip(dim: usize) -> Self {
        let mut p = vec![0.0; dim.max(1)];
        p[0] = 1.0;
        Kernel::Symmetric(p)
    }

    fn family(&self) -> FamilyKind {
        match self {
            Kernel::AdaptiveLogistic => FamilyKind::Logistic,
            Kernel::AdaptiveProduct | Kernel::Symmetric(_) => FamilyKind::Product,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmcConfig {
    pub n: usize,
    pub beta: f64,
    pub zeta_star: f64,
    pub zeta_delta_star: f64,
    pub delta_term: f64,
    pub d_star: usize,
    /// Kernel sweeps per diversity check; `None` picks 1 for independent
    /// kernels and 10 for symmetric ones.
    pub move_batch: Option<usize>,
    pub kernel: Kernel,
    pub seq: SequenceTag,
    pub seed: u64,
    /// Safety cap on outer iterations.
    pub max_iters: usize,
    pub alpha_max: Option<f64>,
    pub step_tol: f64,
    pub fit: FitOptions,
    /// One best-improvement single-flip ascent from the returned particle.
    pub polish: bool,
    /// Print one progress line per iteration to standard error.
    pub verbose: bool,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            beta: 0.9,
            zeta_star: 0.95,
            zeta_delta_star: 0.01,
            delta_term: 0.02,
            d_star: 12,
            move_batch: None,
            kernel: Kernel::AdaptiveLogistic,
            seq: SequenceTag::Tempered,
            seed: 0,
            max_iters: 1000,
            alpha_max: None,
            step_tol: 1e-8,
            fit: FitOptions::default(),
            polish: false,
            verbose: false,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n = {} must be at least 2", self.n));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} must lie in (0,1)", self.beta));
        }
        if !(self.delta_term > 0.0 && self.delta_term < self.zeta_star && self.zeta_star <= 1.0) {
            return bad(format!(
                "need 0 < delta_term ({}) < zeta_star ({}) <= 1",
                self.delta_term, self.zeta_star
            ));
        }
        if !(self.zeta_delta_star >= 0.0) {
            return bad(format!(
                "zeta_delta_star = {} must be nonnegative",
                self.zeta_delta_star
            ));
        }
        if let Some(a) = self.alpha_max {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("alpha_max = {a} must be positive"));
            }
        }
        if !(self.step_tol > 0.0) {
            return bad(format!("step_tol = {} must be positive", self.step_tol));
        }
        if self.move_batch == Some(0) {
            return bad("move_batch must be at least 1".into());
        }
        if self.d_star > MAX_BRUTE_FORCE_DIM {
            return bad(format!(
                "d_star = {} exceeds the brute-force limit {MAX_BRUTE_FORCE_DIM}",
                self.d_star
            ));
        }
        if let Kernel::Symmetric(p) = &self.kernel {
            check_flip_weights(p, dim)?;
        }
        Ok(())
    }

    pub fn effective_move_batch(&self) -> usize {
        self.move_batch.unwrap_or(match self.kernel {
            Kernel::Symmetric(_) => 10,
            _ => 1,
        })
    }

    fn step_options(&self) -> StepOptions {
        StepOptions {
            beta: self.beta,
            alpha_max: self.alpha_max,
            tol: self.step_tol,
            ..StepOptions::default()
        }
    }
}

fn check_flip_weights(p: &[f64], dim: usize) -> Result<()> {
    if p.is_empty() || p.len() > dim {
        return Err(Error::InvalidConfig(format!(
            "symmetric kernel needs 1..={dim} flip weights, got {}",
            p.len()
        )));
    }
    if p.iter().any(|v| !(*v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(
            "flip weights must be nonnegative and sum to 1".into(),
        ));
    }
    Ok(())
}

/// `n` particles with normalized weights, cached objective values and the
/// current sequence parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSystem {
    pub particles: Vec<BinaryVector>,
    pub weights: Vec<f64>,
    pub fvals: Vec<f64>,
    pub rho: f64,
}

impl ParticleSystem {
    /// Uniformly weighted system at `ρ = 0`, evaluating every particle.
    pub fn from_particles(obj: &QuadraticObjective, particles: Vec<BinaryVector>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Domain("particle system needs at least one particle".into()));
        }
        for p in &particles {
            if p.len() != obj.dim() {
                return Err(Error::DimensionMismatch {
                    expected: obj.dim(),
                    found: p.len(),
                });
            }
        }
        let fvals = particles.par_iter().map(|x| obj.value(x.as_slice())).collect();
        let n = particles.len();
        Ok(Self {
            particles,
            weights: vec![1.0 / n as f64; n],
            fvals,
            rho: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Fraction of distinct particles.
    pub fn diversity(&self) -> f64 {
        diversity(&self.particles)
    }

    pub fn ess(&self) -> f64 {
        ess(&self.weights)
    }

    /// Index of the best particle, ties to the lowest index.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (k, &f) in self.fvals.iter().enumerate() {
            if f > self.fvals[best] {
                best = k;
            }
        }
        best
    }

    /// Whether the cached values agree with fresh evaluations.
    pub fn is_consistent(&self, obj: &QuadraticObjective) -> bool {
        self.particles.iter().zip(&self.fvals).all(|(x, &f)| {
            let v = obj.value(x.as_slice());
            (v - f).abs() <= 1e-9 * v.abs().max(1.0)
        })
    }
}

/// Fraction of distinct vectors among `particles`.
pub fn diversity(particles: &[BinaryVector]) -> f64 {
    let distinct: HashSet<&BinaryVector> = particles.iter().collect();
    distinct.len() as f64 / particles.len() as f64
}

pub fn init_system(obj: &QuadraticObjective, n: usize, seed: u64) -> Result<ParticleSystem> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("n = {n} must be at least 2")));
    }
    let d = obj.dim();
    let particles = (0..n)
        .into_par_iter()
        .map(|k| BinaryVector::random(d, &mut substream(seed, Purpose::Init, 0, k as u64)))
        .collect();
    ParticleSystem::from_particles(obj, particles)
}

/// Systematic resampling with a single uniform: afterwards each particle
/// appears `⌊n w_k⌋` or `⌈n w_k⌉` times and the weights are uniform.
pub fn resample_systematic<R: Rng + ?Sized>(sys: &mut ParticleSystem, rng: &mut R) {
    let n = sys.len();
    let v: Vec<f64> = sys.weights.iter().map(|w| n as f64 * w).collect();
    let mut i = 0;
    let mut c = v[0];
    let mut u: f64 = rng.random();
    let mut picks = Vec::with_capacity(n);
    for _ in 0..n {
        while c < u && i + 1 < n {
            i += 1;
            c += v[i];
        }
        picks.push(i);
        u += 1.0;
    }
    sys.particles = picks.iter().map(|&i| sys.particles[i].clone()).collect();
    sys.fvals = picks.iter().map(|&i| sys.fvals[i]).collect();
    sys.weights = vec![1.0 / n as f64; n];
}

/// Result of one kernel sweep over all particles.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepStats {
    pub accepted: usize,
    /// Mean Metropolis–Hastings acceptance probability.
    pub mean_acceptance: f64,
    pub evaluations: u64,
}

fn accept_probability(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// `log λ` for a move from `x` to `γ` given the target log densities and the
/// proposal correction `log q(x|γ) − log q(γ|x)`.
fn log_acceptance(lt_x: f64, lt_gamma: f64, correction: f64) -> f64 {
    if lt_gamma == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if lt_x == f64::NEG_INFINITY {
        0.0
    } else {
        lt_gamma - lt_x + correction
    }
}

fn finish_sweep(results: Vec<(bool, f64)>, evaluations: u64) -> SweepStats {
    let n = results.len().max(1);
    let mut accepted = 0;
    let mut total = 0.0;
    for (acc, p) in results {
        accepted += usize::from(acc);
        total += p;
    }
    SweepStats {
        accepted,
        mean_acceptance: total / n as f64,
        evaluations,
    }
}

/// One independent Metropolis–Hastings sweep: every particle proposes
/// `γ ~ q` and accepts with `1 ∧ π̃(γ) q(x) / (π̃(x) q(γ))`. Randomness for
/// particle `k` comes from the substream `(seed, step, k)`.
pub fn mh_step_independent(
    obj: &QuadraticObjective,
    sys: &mut ParticleSystem,
    q: &FamilyParams,
    kind: &SequenceKind,
    seed: u64,
    step: u64,
) -> Result<SweepStats> {
    if !q.supports_pmf() {
        return Err(Error::InvalidConfig(format!(
            "the {} family cannot drive an independent Metropolis-Hastings kernel",
            q.kind()
        )));
    }
    if q.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            found: q.dim(),
        });
    }
    let rho = sys.rho;
    let results: Vec<(bool, f64)> = sys
        .particles
        .par_iter_mut()
        .zip(sys.fvals.par_iter_mut())
        .enumerate()
        .map(|(k, (x, fx))| {
            let mut rng = substream(seed, Purpose::Move, step, k as u64);
            let (gamma, lq_gamma) = q.sample(&mut rng);
            let lq_gamma = lq_gamma.expect("family supports pmf");
            let lq_x = q.log_pmf(x).expect("dimensions checked");
            let f_gamma = obj.value(gamma.as_slice());
            let log_ratio = log_acceptance(
                kind.log_target(*fx, rho),
                kind.log_target(f_gamma, rho),
                lq_x - lq_gamma,
            );
            let u: f64 = rng.random();
            let accept = u.ln() < log_ratio;
            if accept {
                *x = gamma;
                *fx = f_gamma;
            }
            (accept, accept_probability(log_ratio))
        })
        .collect();
    Ok(finish_sweep(results, sys.len() as u64))
}

/// One symmetric Metropolis–Hastings sweep: every particle flips a uniform
/// `k`-subset of its bits (`k` drawn from `p`) and accepts with
/// `1 ∧ π̃(γ)/π̃(x)`.
pub fn mh_step_symmetric(
    obj: &QuadraticObjective,
    sys: &mut ParticleSystem,
    p: &[f64],
    kind: &SequenceKind,
    seed: u64,
    step: u64,
) -> Result<SweepStats> {
    let d = obj.dim();
    check_flip_weights(p, d)?;
    let rho = sys.rho;
    let results: Vec<(bool, f64)> = sys
        .particles
        .par_iter_mut()
        .zip(sys.fvals.par_iter_mut())
        .enumerate()
        .map(|(k, (x, fx))| {
            let mut rng = substream(seed, Purpose::Move, step, k as u64);
            let flips = draw_flip_count(p, &mut rng);
            let mut bits = x.as_slice().to_vec();
            let mut delta = 0.0;
            for i in index::sample(&mut rng, d, flips) {
                delta += obj.flip_gain(&bits, i);
                bits[i] ^= 1;
            }
            let f_gamma = *fx + delta;
            let log_ratio = log_acceptance(kind.log_target(*fx, rho), kind.log_target(f_gamma, rho), 0.0);
            let u: f64 = rng.random();
            let accept = u.ln() < log_ratio;
            if accept {
                *x = BinaryVector::new(bits).expect("bits are binary");
                *fx = f_gamma;
            }
            (accept, accept_probability(log_ratio))
        })
        .collect();
    Ok(finish_sweep(results, sys.len() as u64))
}

fn draw_flip_count(p: &[f64], rng: &mut StreamRng) -> usize {
    if p.len() == 1 {
        return 1;
    }
    let u: f64 = rng.random();
    let mut c = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        c += pk;
        if u < c {
            return k + 1;
        }
    }
    p.iter().rposition(|&pk| pk > 0.0).map_or(1, |k| k + 1)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MoveStats {
    /// Kernel sweeps applied.
    pub steps_taken: usize,
    pub mean_acceptance: f64,
    pub final_diversity: f64,
    pub evaluations: u64,
}

/// The move step: batches of kernel sweeps until the diversity exceeds
/// `ζ*` or a batch raises it by less than `ζ*_Δ`. At least one batch runs.
///
/// Sweep `s` of outer iteration `iteration` uses the substream key
/// `(iteration << 32) | s`.
#[allow(clippy::too_many_arguments)]
pub fn move_system(
    obj: &QuadraticObjective,
    sys: &mut ParticleSystem,
    q: Option<&FamilyParams>,
    kernel: &Kernel,
    kind: &SequenceKind,
    cfg: &SmcConfig,
    iteration: u64,
) -> Result<MoveStats> {
    let batch = cfg.effective_move_batch();
    let mut prev = sys.diversity();
    let mut stats = MoveStats::default();
    let mut acceptance = 0.0;
    loop {
        for _ in 0..batch {
            let step = (iteration << 32) | stats.steps_taken as u64;
            let sweep = match kernel {
                Kernel::Symmetric(p) => mh_step_symmetric(obj, sys, p, kind, cfg.seed, step)?,
                _ => {
                    let q = q.ok_or_else(|| Error::InvalidConfig("independent kernel needs a fitted family".into()))?;
                    mh_step_independent(obj, sys, q, kind, cfg.seed, step)?
                }
            };
            stats.steps_taken += 1;
            stats.evaluations += sweep.evaluations;
            acceptance += sweep.mean_acceptance;
        }
        debug_assert!(sys.is_consistent(obj), "cached objective values drifted");
        let current = sys.diversity();
        let gain = current - prev;
        prev = current;
        if current > cfg.zeta_star || gain < cfg.zeta_delta_star {
            break;
        }
    }
    stats.mean_acceptance = acceptance / stats.steps_taken as f64;
    stats.final_diversity = prev;
    Ok(stats)
}

/// One line of the progress log.
#[derive(Clone, Debug, PartialEq)]
pub struct SmcIteration {
    pub iteration: u64,
    pub rho: f64,
    pub ess: f64,
    pub diversity: f64,
    pub mean_acceptance: f64,
    pub best_f: f64,
    pub random_components: usize,
}

impl SmcIteration {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{:e}\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.iteration, self.rho, self.ess, self.diversity, self.mean_acceptance, self.best_f
        )
    }
}

/// Why the main loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    LowDiversity,
    Degenerate,
    Saturated,
    MaxIters,
}

/// Full result of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SmcOutcome {
    pub record: RunRecord,
    pub stop: StopReason,
    pub trace: Vec<SmcIteration>,
    pub final_rho: f64,
}

/// Best state seen so far; ties go to the lexicographically smaller vector.
pub(crate) struct Best {
    pub(crate) x: BinaryVector,
    pub(crate) f: f64,
}

impl Best {
    pub(crate) fn offer(&mut self, x: &BinaryVector, f: f64) {
        if f > self.f || (f == self.f && *x < self.x) {
            self.x = x.clone();
            self.f = f;
        }
    }

    fn offer_system(&mut self, sys: &ParticleSystem) {
        let k = sys.best_index();
        self.offer(&sys.particles[k], sys.fvals[k]);
    }
}

/// Components whose weighted mean lies strictly inside `(clip, 1 − clip)`.
pub(crate) fn random_components(means: &[f64], clip: f64) -> Vec<usize> {
    (0..means.len())
        .filter(|&i| means[i] > clip && means[i] < 1.0 - clip)
        .collect()
}

/// Enumerates the `free` components with the others rounded from `means`.
/// Returns the maximizer, its value and the number of states visited.
pub(crate) fn solve_degenerate(
    obj: &QuadraticObjective,
    means: &[f64],
    free: &[usize],
) -> Result<(BinaryVector, f64, u64)> {
    let base = BinaryVector::new(means.iter().map(|&m| u8::from(m >= 0.5)).collect())?;
    let (x, f) = brute_force_restricted(obj, &base, free)?;
    Ok((x, f, 1u64 << free.len()))
}

/// Runs the optimizer and returns the best particle ever observed.
pub fn smc_optimize(obj: &QuadraticObjective, cfg: &SmcConfig) -> Result<RunRecord> {
    smc_run(obj, cfg).map(|o| o.record)
}

/// As [`smc_optimize`], also returning the per-iteration trace.
pub fn smc_run(obj: &QuadraticObjective, cfg: &SmcConfig) -> Result<SmcOutcome> {
    let start = Instant::now();
    let d = obj.dim();
    cfg.validate(d)?;
    let step_opts = cfg.step_options();

    let mut sys = init_system(obj, cfg.n, cfg.seed)?;
    let mut evaluations = cfg.n as u64;
    let mut best = Best {
        x: sys.particles[sys.best_index()].clone(),
        f: f64::NEG_INFINITY,
    };
    best.offer_system(&sys);
    let mut kind = SequenceKind::new(cfg.seq, best.f);

    let step = find_step_length(&kind, &sys.weights, &sys.fvals, 0.0, &step_opts)?;
    sys.weights = step.weights;
    sys.rho = step.alpha;
    let mut saturations = usize::from(step.saturated);

    let mut family = FamilyParams::uniform(cfg.kernel.family(), d);
    let mut trace = Vec::new();
    let mut iteration = 0u64;
    let stop = loop {
        if sys.diversity() <= cfg.delta_term {
            break StopReason::LowDiversity;
        }
        if iteration as usize >= cfg.max_iters {
            break StopReason::MaxIters;
        }
        iteration += 1;

        let sample = WeightedSample::new(&sys.particles, &sys.weights)?;
        let clip = cfg.fit.clip.unwrap_or_else(|| sample.default_clip());
        let means = sample.means();
        let free = random_components(&means, clip);
        if free.len() < cfg.d_star {
            let (x, f, evals) = solve_degenerate(obj, &means, &free)?;
            evaluations += evals;
            best.offer(&x, f);
            trace.push(SmcIteration {
                iteration,
                rho: sys.rho,
                ess: sys.ess(),
                diversity: sys.diversity(),
                mean_acceptance: f64::NAN,
                best_f: best.f,
                random_components: free.len(),
            });
            break StopReason::Degenerate;
        }
        if !matches!(cfg.kernel, Kernel::Symmetric(_)) {
            family = family.fit(&sample, &cfg.fit)?;
        }

        let mut rng = substream(cfg.seed, Purpose::Resample, iteration, 0);
        resample_systematic(&mut sys, &mut rng);
        let moved = move_system(obj, &mut sys, Some(&family), &cfg.kernel, &kind, cfg, iteration)?;
        evaluations += moved.evaluations;
        best.offer_system(&sys);
        kind.observe(best.f);

        let step = find_step_length(&kind, &sys.weights, &sys.fvals, sys.rho, &step_opts)?;
        sys.weights = step.weights;
        sys.rho += step.alpha;

        let line = SmcIteration {
            iteration,
            rho: sys.rho,
            ess: step.ess,
            diversity: moved.final_diversity,
            mean_acceptance: moved.mean_acceptance,
            best_f: best.f,
            random_components: free.len(),
        };
        if cfg.verbose {
            eprintln!("{}", line.to_tsv());
        }
        trace.push(line);

        if step.saturated {
            saturations += 1;
            if saturations >= 2 {
                break StopReason::Saturated;
            }
        } else {
            saturations = 0;
        }
    };

    if cfg.polish {
        let (x, f, evals) = polish(obj, &best.x);
        evaluations += evals;
        best.offer(&x, f);
    }

    let best_f = obj.value(best.x.as_slice());
    Ok(SmcOutcome {
        record: RunRecord {
            algorithm: "smc".into(),
            problem: String::new(),
            seed: cfg.seed,
            best_x: best.x,
            best_f,
            evaluations,
            wall_seconds: start.elapsed().as_secs_f64(),
            iterations: iteration,
        },
        stop,
        trace,
        final_rho: sys.rho,
    })
}

/// Best-improvement single-flip ascent. Returns the local optimum, its
/// value and the number of flip evaluations.
pub fn polish(obj: &QuadraticObjective, start: &BinaryVector) -> (BinaryVector, f64, u64) {
    let mut bits = start.as_slice().to_vec();
    let mut f = obj.value(&bits);
    let mut gains = obj.flip_gains(&bits);
    let mut evals = gains.len() as u64;
    loop {
        let (i, g) =
            gains.iter().copied().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, g)| if g > acc.1 { (i, g) } else { acc },
            );
        if g <= 0.0 {
            break;
        }
        bits[i] ^= 1;
        f += g;
        obj.update_gains_after_flip(&bits, &mut gains, i);
        evals += gains.len() as u64;
    }
    (BinaryVector::new(bits).expect("bits are binary"), f, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::ProductParams;
    use crate::oracle::brute_force;
    use crate::sequences::expected_diversity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> QuadraticObjective {
        QuadraticObjective::from_rows(&[
            vec![1.0, 2.0, 1.0, 0.0],
            vec![2.0, 1.0, -3.0, -2.0],
            vec![1.0, -3.0, 1.0, 2.0],
            vec![0.0, -2.0, 2.0, -2.0],
        ])
        .unwrap()
    }

    fn random_objective(d: usize, seed: u64) -> QuadraticObjective {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..d * d).map(|_| rng.random_range(-10..=10) as f64).collect();
        QuadraticObjective::symmetrized(d, &raw).unwrap()
    }

    fn system_with_weights(w: &[f64]) -> ParticleSystem {
        let d = 3;
        let obj = QuadraticObjective::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let particles = (0..w.len()).map(|k| BinaryVector::from_code(k as u64, d)).collect();
        let mut sys = ParticleSystem::from_particles(&obj, particles).unwrap();
        sys.weights = w.to_vec();
        sys
    }

    #[test]
    fn init_examples() {
        let obj = QuadraticObjective::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let sys = init_system(&obj, 4, 1).unwrap();
        assert_eq!(sys.weights, vec![0.25; 4]);
        assert!(sys.is_consistent(&obj));
        assert_eq!(sys.rho, 0.0);
        assert!(init_system(&obj, 1, 1).is_err());
    }

    #[test]
    fn init_marginals_are_fair() {
        let obj = QuadraticObjective::diagonal(&[1.0; 8]).unwrap();
        let n = 100_000;
        let sys = init_system(&obj, n, 7).unwrap();
        let se = (0.25 / n as f64).sqrt();
        for i in 0..8 {
            let m = sys.particles.iter().filter(|x| x.get(i)).count() as f64 / n as f64;
            assert!((m - 0.5).abs() < 3.0 * se, "bit {i}");
        }
    }

    #[test]
    fn resampling_point_mass() {
        let mut sys = system_with_weights(&[1.0, 0.0, 0.0]);
        let first = sys.particles[0].clone();
        resample_systematic(&mut sys, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(sys.particles.iter().all(|x| *x == first));
        assert_eq!(sys.weights, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn resampling_even_pair() {
        for seed in 0..200 {
            let mut sys = system_with_weights(&[0.5, 0.5]);
            let original = sys.particles.clone();
            resample_systematic(&mut sys, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(sys.particles, original);
        }
    }

    #[test]
    fn resampling_keeps_values_attached() {
        let obj = random_objective(6, 3);
        let mut sys = init_system(&obj, 50, 3).unwrap();
        let raw: Vec<f64> = (0..50).map(|k| (k % 7) as f64 + 0.5).collect();
        let total: f64 = raw.iter().sum();
        sys.weights = raw.iter().map(|r| r / total).collect();
        resample_systematic(&mut sys, &mut ChaCha8Rng::seed_from_u64(4));
        assert!(sys.is_consistent(&obj));
    }

    #[test]
    fn uniform_proposal_at_rho_zero_always_accepts() {
        let obj = random_objective(5, 1);
        let mut sys = init_system(&obj, 200, 2).unwrap();
        let q = FamilyParams::uniform(FamilyKind::Product, 5);
        let stats = mh_step_independent(&obj, &mut sys, &q, &SequenceKind::tempered(), 9, 0).unwrap();
        assert_eq!(stats.accepted, 200);
        assert_eq!(stats.mean_acceptance, 1.0);
        assert!(sys.is_consistent(&obj));
    }

    #[test]
    fn exact_proposal_always_accepts() {
        // A product target: f(x) = Σ c_i x_i at ρ = 1 is exactly a product law.
        let c = [0.7, -1.2, 0.4, 2.0];
        let obj = QuadraticObjective::diagonal(&c).unwrap();
        let m: Vec<f64> = c.iter().map(|&ci| 1.0 / (1.0 + (-ci as f64).exp())).collect();
        let q = FamilyParams::Product(ProductParams::new(m).unwrap());
        let mut sys = init_system(&obj, 300, 5).unwrap();
        sys.rho = 1.0;
        let stats = mh_step_independent(&obj, &mut sys, &q, &SequenceKind::tempered(), 1, 0).unwrap();
        assert!((stats.mean_acceptance - 1.0).abs() < 1e-12);
        assert_eq!(stats.accepted, 300);
    }

    #[test]
    fn copula_cannot_drive_independent_kernel() {
        let obj = random_objective(3, 1);
        let mut sys = init_system(&obj, 10, 2).unwrap();
        let q = FamilyParams::uniform(FamilyKind::Copula, 3);
        assert!(mh_step_independent(&obj, &mut sys, &q, &SequenceKind::tempered(), 1, 0).is_err());
    }

    #[test]
    fn single_flip_proposals_differ_in_one_bit() {
        let obj = random_objective(8, 2);
        let mut sys = init_system(&obj, 500, 3).unwrap();
        let before = sys.particles.clone();
        // ρ = 0: every proposal is accepted.
        let p = match Kernel::single_flip(8) {
            Kernel::Symmetric(p) => p,
            _ => unreachable!(),
        };
        let stats = mh_step_symmetric(&obj, &mut sys, &p, &SequenceKind::tempered(), 4, 0).unwrap();
        assert_eq!(stats.accepted, 500);
        for (a, b) in before.iter().zip(&sys.particles) {
            assert_eq!(a.hamming(b), 1);
        }
        assert!(sys.is_consistent(&obj));
    }

    #[test]
    fn symmetric_acceptance_of_half() {
        // f(x) = −ln2 · x₁: flipping 0 → 1 loses ln 2, so λ = 1/2 at ρ = 1.
        let obj = QuadraticObjective::diagonal(&[-(2f64.ln())]).unwrap();
        let particles = vec![BinaryVector::zeros(1); 1000];
        let mut sys = ParticleSystem::from_particles(&obj, particles).unwrap();
        sys.rho = 1.0;
        let stats = mh_step_symmetric(&obj, &mut sys, &[1.0], &SequenceKind::tempered(), 2, 0).unwrap();
        assert!((stats.mean_acceptance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn multi_flip_kernel_keeps_cache_consistent() {
        let obj = random_objective(10, 5);
        let mut sys = init_system(&obj, 300, 6).unwrap();
        sys.rho = 0.05;
        let p = [0.4, 0.3, 0.2, 0.1];
        for step in 0..20 {
            mh_step_symmetric(&obj, &mut sys, &p, &SequenceKind::tempered(), 7, step).unwrap();
        }
        assert!(sys.is_consistent(&obj));
        assert!(mh_step_symmetric(&obj, &mut sys, &[0.5, 0.4], &SequenceKind::tempered(), 7, 0).is_err());
    }

    #[test]
    fn level_set_moves_stay_in_support() {
        let obj = random_objective(8, 8);
        let mut sys = init_system(&obj, 400, 9).unwrap();
        let fstar = sys.fvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let kind = SequenceKind::new(SequenceTag::LevelSet, fstar);
        let level = fstar - 20.0;
        sys.rho = 1.0 / 20.0;
        // Keep only particles inside the level set.
        let inside: Vec<BinaryVector> = sys
            .particles
            .iter()
            .zip(&sys.fvals)
            .filter(|(_, &f)| f >= level)
            .map(|(x, _)| x.clone())
            .collect();
        let mut sys = ParticleSystem::from_particles(&obj, inside).unwrap();
        sys.rho = 1.0 / 20.0;
        let q = FamilyParams::uniform(FamilyKind::Product, 8);
        for step in 0..10 {
            mh_step_independent(&obj, &mut sys, &q, &kind, 3, step).unwrap();
            mh_step_symmetric(&obj, &mut sys, &[1.0], &kind, 4, step).unwrap();
        }
        assert!(sys.fvals.iter().all(|&f| f >= level));
    }

    #[test]
    fn move_stops_at_full_diversity() {
        let obj = random_objective(20, 1);
        let mut sys = init_system(&obj, 100, 1).unwrap();
        let cfg = SmcConfig {
            kernel: Kernel::AdaptiveProduct,
            ..SmcConfig::default()
        };
        let q = FamilyParams::uniform(FamilyKind::Product, 20);
        let stats = move_system(
            &obj,
            &mut sys,
            Some(&q),
            &cfg.kernel,
            &SequenceKind::tempered(),
            &cfg,
            1,
        )
        .unwrap();
        assert_eq!(stats.steps_taken, 1);
        assert_eq!(stats.final_diversity, 1.0);
    }

    #[test]
    fn move_stops_when_nothing_is_accepted() {
        // Level set containing only the current point: every proposal dies.
        let obj = QuadraticObjective::diagonal(&[1.0, 1.0, 1.0]).unwrap();
        let particles = vec![BinaryVector::ones(3); 50];
        let mut sys = ParticleSystem::from_particles(&obj, particles).unwrap();
        sys.rho = 10.0;
        let kind = SequenceKind::new(SequenceTag::LevelSet, 3.0);
        let cfg = SmcConfig {
            kernel: Kernel::single_flip(3),
            move_batch: Some(1),
            ..SmcConfig::default()
        };
        let stats = move_system(&obj, &mut sys, None, &cfg.kernel, &kind, &cfg, 1).unwrap();
        assert_eq!(stats.steps_taken, 1);
        assert_eq!(stats.mean_acceptance, 0.0);
    }

    #[test]
    fn duplicated_system_regains_diversity() {
        let d = 6;
        let obj = QuadraticObjective::new(d, vec![0.0; d * d]).unwrap();
        let n = 200;
        let mut sys = ParticleSystem::from_particles(&obj, vec![BinaryVector::zeros(d); n]).unwrap();
        let cfg = SmcConfig {
            kernel: Kernel::AdaptiveProduct,
            zeta_delta_star: 0.0,
            ..SmcConfig::default()
        };
        let q = FamilyParams::uniform(FamilyKind::Product, d);
        let stats = move_system(
            &obj,
            &mut sys,
            Some(&q),
            &cfg.kernel,
            &SequenceKind::tempered(),
            &cfg,
            1,
        )
        .unwrap();
        let expected = expected_diversity(&vec![1.0 / 64.0; 64], n).unwrap();
        // 64 states for 200 particles: all states present is the expected limit.
        assert!(expected < 1.0);
        assert!(stats.steps_taken >= 1);
        assert!(
            (stats.final_diversity - expected).abs() < 0.05,
            "{} vs {expected}",
            stats.final_diversity
        );
    }

    #[test]
    fn optimizes_toy_and_separable_objectives() {
        // Two maximizers tie at 6; either may be returned.
        let (_, f_opt) = brute_force(&toy()).unwrap();
        for seed in 0..5 {
            let cfg = SmcConfig {
                n: 1000,
                seed,
                ..SmcConfig::default()
            };
            let r = smc_optimize(&toy(), &cfg).unwrap();
            assert_eq!(r.best_f, f_opt);
        }
        let diag =
            QuadraticObjective::diagonal(&[1.0, 2.0, 0.5, 3.0, 1.5, 0.25, 4.0, 2.0, 1.0, 1.0, 3.0, 2.0, 1.0, 0.5])
                .unwrap();
        let cfg = SmcConfig {
            n: 500,
            d_star: 0,
            seed: 3,
            ..SmcConfig::default()
        };
        let r = smc_optimize(&diag, &cfg).unwrap();
        assert_eq!(r.best_x, BinaryVector::ones(14));
    }

    #[test]
    fn full_loop_on_random_instance() {
        let obj = random_objective(14, 21);
        let (_, f_opt) = brute_force(&obj).unwrap();
        for (kernel, seq) in [
            (Kernel::AdaptiveLogistic, SequenceTag::Tempered),
            (Kernel::AdaptiveProduct, SequenceTag::Tempered),
            (Kernel::AdaptiveLogistic, SequenceTag::LevelSet),
            (Kernel::AdaptiveLogistic, SequenceTag::LogisticPotential),
            (Kernel::single_flip(14), SequenceTag::Tempered),
        ] {
            let cfg = SmcConfig {
                n: 800,
                d_star: 0,
                kernel: kernel.clone(),
                seq,
                seed: 5,
                ..SmcConfig::default()
            };
            let out = smc_run(&obj, &cfg).unwrap();
            assert_eq!(out.record.best_f, obj.evaluate(&out.record.best_x).unwrap());
            assert_eq!(out.record.best_f, f_opt, "{kernel:?} {seq}");
            // ρ never decreases.
            let rhos: Vec<f64> = out.trace.iter().map(|t| t.rho).collect();
            assert!(rhos.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let obj = toy();
        for cfg in [
            SmcConfig {
                n: 1,
                ..SmcConfig::default()
            },
            SmcConfig {
                beta: 1.0,
                ..SmcConfig::default()
            },
            SmcConfig {
                delta_term: 0.99,
                ..SmcConfig::default()
            },
            SmcConfig {
                move_batch: Some(0),
                ..SmcConfig::default()
            },
            SmcConfig {
                kernel: Kernel::Symmetric(vec![0.5, 0.2]),
                ..SmcConfig::default()
            },
        ] {
            assert!(smc_optimize(&obj, &cfg).unwrap_err().is_validation());
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let obj = random_objective(16, 4);
        let cfg = SmcConfig {
            n: 400,
            d_star: 4,
            seed: 77,
            ..SmcConfig::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| smc_optimize(&obj, &cfg).unwrap())
        };
        assert!(run(1).same_outcome(&run(8)));
    }

    #[test]
    fn polish_reaches_local_optimum() {
        let obj = random_objective(12, 9);
        let (x, f, _) = polish(&obj, &BinaryVector::zeros(12));
        assert!(crate::oracle::is_one_opt(&obj, &x));
        assert_eq!(f, obj.evaluate(&x).unwrap());
    }
}
