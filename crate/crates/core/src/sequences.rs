//! Sequences of distributions that concentrate on the maximizers of `f`,
//! importance reweighting along them and the adaptive step length.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::log_logistic;

/// Largest enumeration accepted by [`expected_diversity`].
pub const MAX_ENUM_DIM: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceTag {
    /// `π_ρ ∝ exp(ρ f)`.
    Tempered,
    /// Uniform on the super-level set `{f ≥ f* − 1/ρ}`.
    LevelSet,
    /// `π_ρ ∝ ℓ(ρ (f − f*))`. Experimental in the optimization setting.
    LogisticPotential,
}

impl SequenceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SequenceTag::Tempered => "tempered",
            SequenceTag::LevelSet => "level_set",
            SequenceTag::LogisticPotential => "logistic_potential",
        }
    }
}

impl fmt::Display for SequenceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SequenceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tempered" => Ok(SequenceTag::Tempered),
            "level_set" | "level-set" => Ok(SequenceTag::LevelSet),
            "logistic_potential" | "logistic-potential" => Ok(SequenceTag::LogisticPotential),
            other => Err(Error::InvalidConfig(format!("unknown sequence '{other}'"))),
        }
    }
}

/// A sequence together with the plug-in `f*`, the best value seen so far.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceKind {
    pub tag: SequenceTag,
    pub fstar: f64,
}

impl SequenceKind {
    pub fn new(tag: SequenceTag, fstar: f64) -> Self {
        Self { tag, fstar }
    }

    pub fn tempered() -> Self {
        Self::new(SequenceTag::Tempered, 0.0)
    }

    /// Raises `f*` monotonically.
    pub fn observe(&mut self, f: f64) {
        if f > self.fstar {
            self.fstar = f;
        }
    }

    /// `log π̃_ρ(x)` given `f(x)`; `−∞` outside the support.
    pub fn log_target(&self, f: f64, rho: f64) -> f64 {
        match self.tag {
            SequenceTag::Tempered => rho * f,
            SequenceTag::LevelSet => {
                if rho <= 0.0 || f >= self.fstar - 1.0 / rho {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            SequenceTag::LogisticPotential => log_logistic(rho * (f - self.fstar)),
        }
    }
}

/// `log u_k` taking the target from `ρ` to `ρ + α`.
pub fn log_weight_update(kind: &SequenceKind, fvals: &[f64], rho: f64, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("step length {alpha} must be nonnegative")));
    }
    let next = rho + alpha;
    Ok(match kind.tag {
        SequenceTag::Tempered => fvals.iter().map(|f| alpha * f).collect(),
        SequenceTag::LevelSet => {
            if next <= 0.0 {
                return Err(Error::Domain(format!(
                    "level-set update needs rho + alpha > 0, got {next}"
                )));
            }
            let level = kind.fstar - 1.0 / next;
            fvals
                .iter()
                .map(|&f| if f >= level { 0.0 } else { f64::NEG_INFINITY })
                .collect()
        }
        SequenceTag::LogisticPotential => fvals
            .iter()
            .map(|&f| {
                let gap = f - kind.fstar;
                log_logistic(next * gap) - log_logistic(rho * gap)
            })
            .collect(),
    })
}

/// `w'_k ∝ w_k exp(log_u_k)`, normalized.
pub fn reweight(w: &[f64], log_u: &[f64]) -> Result<Vec<f64>> {
    if w.len() != log_u.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: log_u.len(),
        });
    }
    let top = w
        .iter()
        .zip(log_u)
        .filter(|(&wk, _)| wk > 0.0)
        .map(|(_, &l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Err(Error::DegenerateWeights);
    }
    let un: Vec<f64> = w
        .iter()
        .zip(log_u)
        .map(|(&wk, &l)| if wk > 0.0 { wk * (l - top).exp() } else { 0.0 })
        .collect();
    let total: f64 = un.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateWeights);
    }
    Ok(un.into_iter().map(|u| u / total).collect())
}

/// Effective sample size `1/(n Σ w_k²)` as a fraction of `n`.
pub fn ess(w: &[f64]) -> f64 {
    let sq: f64 = w.iter().map(|x| x * x).sum();
    1.0 / (w.len() as f64 * sq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOptions {
    /// Target ESS ratio.
    pub beta: f64,
    /// Upper end of the search bracket; `None` means `100 (ρ + 1)`.
    pub alpha_max: Option<f64>,
    pub tol: f64,
    pub max_bisections: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            beta: 0.9,
            alpha_max: None,
            tol: 1e-8,
            max_bisections: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub ess: f64,
    /// Set when even `α_max` could not lower the ESS to the target.
    pub saturated: bool,
}

/// Chooses `α` such that the ESS drops by the factor `β`.
///
/// For the level-set sequence the update only keeps or kills particles, so
/// the step is found by ordering instead of bisection: the survivors are the
/// shortest prefix of the particles sorted by decreasing `f` (ties by
/// ascending index) whose renormalized weights reach the target ESS.
pub fn find_step_length(
    kind: &SequenceKind,
    w: &[f64],
    fvals: &[f64],
    rho: f64,
    opts: &StepOptions,
) -> Result<StepResult> {
    if w.len() != fvals.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: fvals.len(),
        });
    }
    if !(opts.beta > 0.0 && opts.beta < 1.0) {
        return Err(Error::Domain(format!("beta {} outside (0,1)", opts.beta)));
    }
    let alpha_max = opts.alpha_max.unwrap_or(100.0 * (rho + 1.0));
    if !(alpha_max > 0.0) {
        return Err(Error::Domain(format!("alpha_max {alpha_max} must be positive")));
    }
    let target = opts.beta * ess(w);
    if kind.tag == SequenceTag::LevelSet {
        return level_set_step(kind, w, fvals, rho, target, alpha_max);
    }

    let at = |alpha: f64| -> Result<(Vec<f64>, f64)> {
        let wa = reweight(w, &log_weight_update(kind, fvals, rho, alpha)?)?;
        let e = ess(&wa);
        Ok((wa, e))
    };
    let (w_max, e_max) = at(alpha_max)?;
    if e_max > target + opts.tol {
        return Ok(StepResult {
            alpha: alpha_max,
            weights: w_max,
            ess: e_max,
            saturated: true,
        });
    }
    let (mut lo, mut hi) = (0.0, alpha_max);
    let mut best = (alpha_max, w_max, e_max);
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        let (wm, em) = at(mid)?;
        let done = (em - target).abs() <= opts.tol;
        if em > target {
            lo = mid;
        } else {
            hi = mid;
        }
        best = (mid, wm, em);
        // Keep refining the bracket so α itself is accurate, not only the ESS.
        if (done && hi - lo <= opts.tol * hi.max(1.0)) || hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(StepResult {
        alpha: best.0,
        weights: best.1,
        ess: best.2,
        saturated: false,
    })
}

fn level_set_step(
    kind: &SequenceKind,
    w: &[f64],
    fvals: &[f64],
    rho: f64,
    target: f64,
    alpha_max: f64,
) -> Result<StepResult> {
    let order = elite_order(w, fvals);
    if order.is_empty() {
        return Err(Error::DegenerateWeights);
    }
    let n = w.len() as f64;
    let lowest = fvals[*order.last().expect("nonempty")];
    let highest = fvals[order[0]];
    if lowest == highest {
        return Ok(StepResult {
            alpha: alpha_max,
            weights: w.to_vec(),
            ess: ess(w),
            saturated: true,
        });
    }
    // ESS of the weights restricted to the first m survivors.
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut keep = order.len();
    for (m, &k) in order.iter().enumerate() {
        s1 += w[k];
        s2 += w[k] * w[k];
        if s1 * s1 / (n * s2) >= target {
            keep = m + 1;
            break;
        }
    }
    let survivors = &order[..keep];
    let cut = fvals[survivors[keep - 1]];
    let mut weights = vec![0.0; w.len()];
    let total: f64 = survivors.iter().map(|&k| w[k]).sum();
    for &k in survivors {
        weights[k] = w[k] / total;
    }
    let gap = kind.fstar - cut;
    let alpha = if gap > 0.0 {
        (1.0 / gap - rho).clamp(0.0, alpha_max)
    } else {
        alpha_max
    };
    let e = ess(&weights);
    Ok(StepResult {
        alpha,
        weights,
        ess: e,
        saturated: false,
    })
}

/// Indices with positive weight, sorted by decreasing `f`, ties by index.
pub fn elite_order(w: &[f64], fvals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).filter(|&k| w[k] > 0.0).collect();
    order.sort_by(|&a, &b| fvals[b].total_cmp(&fvals[a]).then(a.cmp(&b)));
    order
}

/// Elite of the cross-entropy method: the `⌈n (1 − discard)⌉` best particles,
/// ties by index.
pub fn elite_indices(fvals: &[f64], discard: f64) -> Vec<usize> {
    let n = fvals.len();
    // The slack keeps products such as 10 · (1 − 0.8) from rounding up.
    let keep = ((n as f64) * (1.0 - discard) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let w = vec![1.0; n];
    let mut order = elite_order(&w, fvals);
    order.truncate(keep);
    order
}

/// Expected particle diversity `ζ_n(π)` of `n` draws from a fully enumerated
/// mass function.
pub fn expected_diversity(pmf: &[f64], n: usize) -> Result<f64> {
    if pmf.len() > 1 << MAX_ENUM_DIM {
        return Err(Error::Guard {
            what: "enumerated states",
            value: pmf.len(),
            limit: 1 << MAX_ENUM_DIM,
        });
    }
    if n == 0 {
        return Err(Error::Domain("expected diversity needs n ≥ 1".into()));
    }
    if pmf.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain("mass function must be finite and nonnegative".into()));
    }
    let positive: Vec<f64> = pmf.iter().copied().filter(|&p| p > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::DegenerateWeights);
    }
    let total: f64 = positive.iter().sum();
    let probs: Vec<f64> = positive.iter().map(|p| p / total).collect();
    let floor_count = |c: f64| -> f64 { probs.iter().map(|&p| (c * p * (1.0 + 1e-12)).floor()).sum() };

    let nf = n as f64;
    let (mut lo, mut hi) = (0.0, nf + probs.len() as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if floor_count(mid) >= nf {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    // The count only jumps at c = k/π, so snap to the last jump at or below hi.
    let c = probs
        .iter()
        .map(|&p| (hi * p * (1.0 + 1e-12)).floor() / p)
        .fold(0.0, f64::max);
    let hits = probs.iter().filter(|&&p| c * p >= 1.0 - 1e-12).count();
    Ok((hits as f64 / nf).min(1.0))
}
