//! Logistic conditionals family: a chain-rule binary model whose `i`-th
//! conditional is a logistic regression on the preceding components.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::{log_logistic, logistic, logit, FitOptions, ProductParams, SampleWithMass, WeightedSample};
use crate::error::{Error, Result};
use crate::objective::BinaryVector;

/// Lower-triangular parameter matrix `A`; row `i` holds the coefficients of
/// components `0..i` followed by the intercept `a_ii` on the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticParams {
    dim: usize,
    a: Vec<f64>,
}

/// Per-row outcome of a fit, for diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LogisticFitReport {
    /// Rows that needed the penalty raised before Newton converged.
    pub escalated_rows: usize,
    /// Rows that fell back to the intercept-only mean fit.
    pub fallback_rows: usize,
    /// Rows whose response column was (numerically) constant.
    pub constant_rows: usize,
}

impl LogisticParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
        }
    }

    /// Row-major `dim × dim` matrix; entries above the diagonal must be zero.
    pub fn new(dim: usize, a: Vec<f64>) -> Result<Self> {
        if dim == 0 || a.len() != dim * dim {
            return Err(Error::InvalidParams(format!(
                "logistic parameter needs {} entries, got {}",
                dim * dim,
                a.len()
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                let v = a[i * dim + j];
                if !v.is_finite() {
                    return Err(Error::InvalidParams(format!("entry ({i},{j}) is not finite")));
                }
                if j > i && v != 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "entry ({i},{j}) above the diagonal must be zero"
                    )));
                }
            }
        }
        Ok(Self { dim, a })
    }

    /// The product family as the special case `A = diag(logit m)`.
    pub fn from_product(p: &ProductParams) -> Self {
        let mut out = Self::zeros(p.dim());
        for (i, l) in p.logits().into_iter().enumerate() {
            out.a[i * out.dim + i] = l;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    #[inline]
    fn linear_predictor(&self, i: usize, bits: &[u8]) -> f64 {
        let row = &self.a[i * self.dim..i * self.dim + i + 1];
        let mut eta = row[i];
        for j in 0..i {
            if bits[j] == 1 {
                eta += row[j];
            }
        }
        eta
    }

    /// Draws components in index order and accumulates the exact log mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleWithMass {
        let mut bits = vec![0u8; self.dim];
        let mut log_p = 0.0;
        for i in 0..self.dim {
            let eta = self.linear_predictor(i, &bits);
            let r = logistic(eta);
            if rng.random::<f64>() < r {
                bits[i] = 1;
                log_p += log_logistic(eta);
            } else {
                log_p += log_logistic(-eta);
            }
        }
        SampleWithMass {
            y: BinaryVector::new(bits).expect("bits are binary"),
            log_p,
        }
    }

    pub fn log_pmf(&self, y: &BinaryVector) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        Ok(self.log_pmf_unchecked(y.as_slice()))
    }

    pub(crate) fn log_pmf_unchecked(&self, bits: &[u8]) -> f64 {
        (0..self.dim)
            .map(|i| {
                let eta = self.linear_predictor(i, bits);
                if bits[i] == 1 {
                    log_logistic(eta)
                } else {
                    log_logistic(-eta)
                }
            })
            .sum()
    }

    pub fn fit(sample: &WeightedSample<'_>, init: &LogisticParams, opts: &FitOptions) -> Result<Self> {
        Self::fit_with_report(sample, init, opts).map(|(p, _)| p)
    }

    /// Fits every row by penalized weighted Newton–Raphson.
    ///
    /// Rows are independent, so they run in parallel; each row's result only
    /// depends on the sample and `init`.
    pub fn fit_with_report(
        sample: &WeightedSample<'_>,
        init: &LogisticParams,
        opts: &FitOptions,
    ) -> Result<(Self, LogisticFitReport)> {
        let dim = sample.dim();
        if init.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: init.dim,
            });
        }
        if !(opts.penalty > 0.0) {
            return Err(Error::Domain("penalty must be positive".into()));
        }
        let clip = opts.clip.unwrap_or_else(|| sample.default_clip());
        let means = sample.means();
        let corr = sample.correlations();

        let rows: Vec<(Vec<f64>, RowOutcome)> = (0..dim)
            .into_par_iter()
            .map(|i| fit_row(sample, init, opts, clip, &means, &corr, i))
            .collect();

        let mut out = Self::zeros(dim);
        let mut report = LogisticFitReport::default();
        for (i, (row, outcome)) in rows.into_iter().enumerate() {
            out.a[i * dim..i * dim + i + 1].copy_from_slice(&row);
            match outcome {
                RowOutcome::Converged => {}
                RowOutcome::Escalated => report.escalated_rows += 1,
                RowOutcome::Fallback => report.fallback_rows += 1,
                RowOutcome::Constant => report.constant_rows += 1,
            }
        }
        Ok((out, report))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowOutcome {
    Converged,
    Escalated,
    Fallback,
    Constant,
}

/// Aggregated regression data: distinct (predictor pattern, response) pairs
/// with their summed weights.
struct RowData {
    /// Number of columns in the design, including the intercept.
    cols: usize,
    /// Flattened design rows of length `cols`.
    z: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

fn aggregate_row(sample: &WeightedSample<'_>, predictors: &[usize], i: usize) -> RowData {
    let cols = predictors.len() + 1;
    let mut z = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let push = |bits: &[u8], wt: f64, z: &mut Vec<f64>, y: &mut Vec<f64>, w: &mut Vec<f64>| {
        z.extend(predictors.iter().map(|&j| f64::from(bits[j])));
        z.push(1.0);
        y.push(f64::from(bits[i]));
        w.push(wt);
    };
    if cols <= 128 {
        // Identical (pattern, response) pairs contribute identically to the
        // likelihood; merging them shrinks the Newton system considerably once
        // the particle system concentrates.
        let mut keyed: Vec<(u128, f64)> = sample
            .particles()
            .iter()
            .zip(sample.weights())
            .filter(|(_, &wt)| wt > 0.0)
            .map(|(x, &wt)| {
                let bits = x.as_slice();
                let mut key = u128::from(bits[i]);
                for (k, &j) in predictors.iter().enumerate() {
                    key |= u128::from(bits[j]) << (k + 1);
                }
                (key, wt)
            })
            .collect();
        keyed.sort_by_key(|&(k, _)| k);
        let mut bits = vec![0u8; sample.dim()];
        let mut idx = 0;
        while idx < keyed.len() {
            let key = keyed[idx].0;
            let mut wt = 0.0;
            while idx < keyed.len() && keyed[idx].0 == key {
                wt += keyed[idx].1;
                idx += 1;
            }
            bits[i] = (key & 1) as u8;
            for (k, &j) in predictors.iter().enumerate() {
                bits[j] = ((key >> (k + 1)) & 1) as u8;
            }
            push(&bits, wt, &mut z, &mut y, &mut w);
        }
    } else {
        for (x, &wt) in sample.particles().iter().zip(sample.weights()) {
            if wt > 0.0 {
                push(x.as_slice(), wt, &mut z, &mut y, &mut w);
            }
        }
    }
    RowData { cols, z, y, w }
}

/// Penalized Newton iterations from `start`; `None` when the iteration does
/// not converge within `max_iter` steps or produces non-finite values.
fn newton(data: &RowData, start: &[f64], penalty: f64, tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let p = data.cols;
    let mut a = DVector::from_column_slice(start);
    for _ in 0..max_iter {
        let mut h = DMatrix::<f64>::zeros(p, p);
        let mut g = DVector::<f64>::zeros(p);
        for (k, zrow) in data.z.chunks_exact(p).enumerate() {
            let eta: f64 = zrow.iter().zip(a.iter()).map(|(z, a)| z * a).sum();
            let pk = logistic(eta);
            let wq = data.w[k] * pk * (1.0 - pk);
            let resid = data.w[k] * (data.y[k] - pk);
            for r in 0..p {
                if zrow[r] == 0.0 {
                    continue;
                }
                g[r] += resid * zrow[r];
                for c in 0..=r {
                    h[(r, c)] += wq * zrow[r] * zrow[c];
                }
            }
        }
        for r in 0..p {
            for c in 0..r {
                h[(c, r)] = h[(r, c)];
            }
            h[(r, r)] += penalty;
        }
        g -= penalty * &a;
        let step = h.cholesky()?.solve(&g);
        if step.iter().any(|s| !s.is_finite()) {
            return None;
        }
        a += &step;
        if step.amax() < tol {
            return Some(a.iter().copied().collect());
        }
    }
    None
}

fn fit_row(
    sample: &WeightedSample<'_>,
    init: &LogisticParams,
    opts: &FitOptions,
    clip: f64,
    means: &[f64],
    corr: &[f64],
    i: usize,
) -> (Vec<f64>, RowOutcome) {
    let dim = sample.dim();
    let mean_fit = |outcome| {
        let mut row = vec![0.0; i + 1];
        row[i] = logit(means[i].clamp(clip, 1.0 - clip));
        (row, outcome)
    };
    if means[i] <= clip || means[i] >= 1.0 - clip {
        return mean_fit(RowOutcome::Constant);
    }
    let predictors: Vec<usize> = (0..i)
        .filter(|&j| corr[i * dim + j].abs() >= opts.corr_screen && corr[i * dim + j] != 0.0)
        .collect();
    let data = aggregate_row(sample, &predictors, i);
    let start: Vec<f64> = predictors
        .iter()
        .map(|&j| init.coeff(i, j))
        .chain(std::iter::once(init.coeff(i, i)))
        .collect();

    let mut penalty = opts.penalty;
    for attempt in 0..=2 {
        if let Some(sol) = newton(&data, &start, penalty, opts.newton_tol, opts.max_iter) {
            let mut row = vec![0.0; i + 1];
            for (k, &j) in predictors.iter().enumerate() {
                row[j] = sol[k];
            }
            row[i] = sol[predictors.len()];
            let outcome = if attempt == 0 {
                RowOutcome::Converged
            } else {
                RowOutcome::Escalated
            };
            return (row, outcome);
        }
        penalty *= 10.0;
    }
    mean_fit(RowOutcome::Fallback)
}
