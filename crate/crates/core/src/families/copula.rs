//! Gaussian copula family: `y_i = 1{v_i ≤ a_i}` for `v ~ N(0, Σ)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::normal::{bvn_density, phi1_inv, phi2};
use super::{FitOptions, WeightedSample};
use crate::error::{Error, Result};
use crate::objective::BinaryVector;

/// Bounds of the bisection bracket for a single correlation.
pub const SIGMA_BOUND: f64 = 1.0 - 1e-8;

/// Smallest eigenvalue at or below which a correlation matrix gets repaired.
pub const REPAIR_THRESHOLD: f64 = 1e-9;

/// Extra diagonal shift on top of `|λ_min|` so the repaired matrix is
/// strictly positive definite rather than singular.
const REPAIR_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct CopulaParams {
    a: Vec<f64>,
    sigma: Vec<f64>,
    /// Lower Cholesky factor of `sigma`, row-major.
    chol: Vec<f64>,
}

/// Diagnostics from a copula fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CopulaFitReport {
    /// Pairs whose correlation was solved (not screened out).
    pub solved_pairs: usize,
    /// Pairs that needed bisection.
    pub bisected_pairs: usize,
    pub repaired: bool,
}

impl CopulaParams {
    /// Builds the family from thresholds and a correlation matrix, repairing
    /// `sigma` first when it is not positive definite.
    pub fn new(a: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        Self::with_repair(a, sigma).map(|(p, _)| p)
    }

    fn with_repair(a: Vec<f64>, mut sigma: Vec<f64>) -> Result<(Self, bool)> {
        let d = a.len();
        if d == 0 || sigma.len() != d * d {
            return Err(Error::InvalidParams(format!(
                "copula needs {} correlation entries for {d} thresholds, got {}",
                d * d,
                sigma.len()
            )));
        }
        if a.iter().chain(&sigma).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite copula parameter".into()));
        }
        for i in 0..d {
            if (sigma[i * d + i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParams(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                let (u, l) = (sigma[j * d + i], sigma[i * d + j]);
                if u != l {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                if !(-1.0..=1.0).contains(&u) {
                    return Err(Error::InvalidParams(format!("correlation ({i},{j}) = {u}")));
                }
            }
        }
        let repaired = repair_correlation(&mut sigma, d);
        let chol = DMatrix::from_row_slice(d, d, &sigma)
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("correlation matrix is not positive definite".into()))?
            .l();
        let mut chol_rows = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                chol_rows[i * d + j] = chol[(i, j)];
            }
        }
        Ok((
            Self {
                a,
                sigma,
                chol: chol_rows,
            },
            repaired,
        ))
    }

    /// Independent components with marginals `m`, i.e. `Σ = I`.
    pub fn independent(m: &[f64]) -> Result<Self> {
        let a = m.iter().map(|&p| phi1_inv(p)).collect::<Result<Vec<_>>>()?;
        let d = a.len();
        let mut sigma = vec![0.0; d * d];
        for i in 0..d {
            sigma[i * d + i] = 1.0;
        }
        Self::new(a, sigma)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.a
    }

    /// Correlation matrix, row-major.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BinaryVector {
        let d = self.a.len();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let bits = (0..d)
            .map(|i| {
                let row = &self.chol[i * d..i * d + i + 1];
                let v: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
                u8::from(v <= self.a[i])
            })
            .collect();
        BinaryVector::new(bits).expect("bits are binary")
    }

    pub fn fit(sample: &WeightedSample<'_>, sigma_init: Option<&[f64]>, opts: &FitOptions) -> Result<Self> {
        Self::fit_with_report(sample, sigma_init, opts).map(|(p, _)| p)
    }

    /// Solves the first and second moment equations pairwise, then repairs
    /// the assembled correlation matrix if needed.
    pub fn fit_with_report(
        sample: &WeightedSample<'_>,
        sigma_init: Option<&[f64]>,
        opts: &FitOptions,
    ) -> Result<(Self, CopulaFitReport)> {
        let d = sample.dim();
        if let Some(s) = sigma_init {
            if s.len() != d * d {
                return Err(Error::DimensionMismatch {
                    expected: d * d,
                    found: s.len(),
                });
            }
        }
        let clip = opts.clip.unwrap_or_else(|| sample.default_clip());
        let m2 = sample.second_moments();
        let corr = sample.correlations();
        let a = (0..d)
            .map(|i| phi1_inv(m2[i * d + i].clamp(clip, 1.0 - clip)))
            .collect::<Result<Vec<_>>>()?;

        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                let c = corr[i * d + j];
                c != 0.0 && c.abs() >= opts.corr_screen
            })
            .collect();
        let solved: Vec<(f64, bool)> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let init = sigma_init.map_or(corr[i * d + j], |s| s[i * d + j]);
                solve_sigma(a[i], a[j], m2[i * d + j], init, opts.newton_tol, opts.max_iter)
            })
            .collect::<Result<_>>()?;

        let mut sigma = vec![0.0; d * d];
        for i in 0..d {
            sigma[i * d + i] = 1.0;
        }
        let mut report = CopulaFitReport {
            solved_pairs: pairs.len(),
            ..CopulaFitReport::default()
        };
        for (&(i, j), &(s, bisected)) in pairs.iter().zip(&solved) {
            sigma[i * d + j] = s;
            sigma[j * d + i] = s;
            report.bisected_pairs += usize::from(bisected);
        }
        let (params, repaired) = Self::with_repair(a, sigma)?;
        report.repaired = repaired;
        Ok((params, report))
    }
}

/// Solves `Φ₂(ai, aj; σ) = target` for `σ`; the flag reports whether
/// bisection was needed.
pub fn solve_sigma(ai: f64, aj: f64, target: f64, init: f64, tol: f64, max_iter: usize) -> Result<(f64, bool)> {
    let (lo, hi) = (-SIGMA_BOUND, SIGMA_BOUND);
    let f = |s: f64| phi2(ai, aj, s).map(|v| v - target);
    if f(hi)? <= 0.0 {
        return Ok((hi, false));
    }
    if f(lo)? >= 0.0 {
        return Ok((lo, false));
    }
    let mut s = init.clamp(lo, hi);
    for _ in 0..max_iter {
        let dens = bvn_density(ai, aj, s);
        if dens < 1e-12 {
            break;
        }
        let step = f(s)? / dens;
        let next = s - step;
        if !(lo..=hi).contains(&next) {
            break;
        }
        s = next;
        if step.abs() < tol {
            return Ok((s, false));
        }
    }
    // Φ₂ is increasing in σ, so the sign change brackets the root.
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), true))
}

/// Shrinks a symmetric unit-diagonal matrix towards the identity when its
/// smallest eigenvalue is at most [`REPAIR_THRESHOLD`]:
/// `Σ ← (Σ + sI)/(1 + s)` with `s = |λ_min| + 1e-6`. Returns whether a
/// repair happened.
pub fn repair_correlation(sigma: &mut [f64], d: usize) -> bool {
    let lambda = smallest_eigenvalue(sigma, d);
    if lambda > REPAIR_THRESHOLD {
        return false;
    }
    let s = lambda.abs() + REPAIR_MARGIN;
    for i in 0..d {
        for j in 0..d {
            let v = sigma[i * d + j] + if i == j { s } else { 0.0 };
            sigma[i * d + j] = v / (1.0 + s);
        }
    }
    true
}

pub fn smallest_eigenvalue(sigma: &[f64], d: usize) -> f64 {
    let m = DMatrix::from_row_slice(d, d, sigma);
    SymmetricEigen::new(m).eigenvalues.min()
}
