//! Parametric families on the binary hypercube: fitting, sampling and
//! pointwise mass evaluation.

mod copula;
mod logistic;
pub mod normal;
mod product;
mod sample;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use copula::{repair_correlation, smallest_eigenvalue, solve_sigma, CopulaFitReport, CopulaParams};
pub use logistic::{LogisticFitReport, LogisticParams};
pub use product::ProductParams;
pub use sample::WeightedSample;

use crate::error::{Error, Result};
use crate::objective::BinaryVector;

/// A draw together with the natural log of its mass under the sampling law.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleWithMass {
    pub y: BinaryVector,
    pub log_p: f64,
}

/// `ℓ(x) = 1/(1 + e^{−x})`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log ℓ(x)`, accurate for large `|x|`.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `ℓ⁻¹(p) = log(p/(1−p))`.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Tuning shared by the fitting procedures.
#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Marginal clip; `None` means `max(1/(2n), 1e-6)` for the sample at hand.
    pub clip: Option<f64>,
    /// Ridge penalty of the logistic Newton system.
    pub penalty: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Pairs with weaker absolute sample correlation are not modelled.
    pub corr_screen: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            clip: None,
            penalty: 1e-4,
            newton_tol: 1e-6,
            max_iter: 50,
            corr_screen: 0.075,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Product,
    Logistic,
    Copula,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Product => "product",
            FamilyKind::Logistic => "logistic",
            FamilyKind::Copula => "copula",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(FamilyKind::Product),
            "logistic" => Ok(FamilyKind::Logistic),
            "copula" => Ok(FamilyKind::Copula),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

/// Parameters of any of the three families.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyParams {
    Product(ProductParams),
    Logistic(LogisticParams),
    Copula(CopulaParams),
}

impl FamilyParams {
    /// The uniform law on the hypercube, expressed in the given family.
    pub fn uniform(kind: FamilyKind, dim: usize) -> Self {
        match kind {
            FamilyKind::Product => FamilyParams::Product(ProductParams::uniform(dim)),
            FamilyKind::Logistic => FamilyParams::Logistic(LogisticParams::zeros(dim)),
            FamilyKind::Copula => {
                FamilyParams::Copula(CopulaParams::independent(&vec![0.5; dim]).expect("identity correlation is valid"))
            }
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            FamilyParams::Product(_) => FamilyKind::Product,
            FamilyParams::Logistic(_) => FamilyKind::Logistic,
            FamilyParams::Copula(_) => FamilyKind::Copula,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FamilyParams::Product(p) => p.dim(),
            FamilyParams::Logistic(p) => p.dim(),
            FamilyParams::Copula(p) => p.dim(),
        }
    }

    /// Whether [`FamilyParams::log_pmf`] is available.
    pub fn supports_pmf(&self) -> bool {
        !matches!(self, FamilyParams::Copula(_))
    }

    /// Fits a new parameter of the same family; `self` serves as the warm
    /// start for the iterative procedures.
    pub fn fit(&self, sample: &WeightedSample<'_>, opts: &FitOptions) -> Result<Self> {
        if sample.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: sample.dim(),
            });
        }
        Ok(match self {
            FamilyParams::Product(_) => {
                let clip = opts.clip.unwrap_or_else(|| sample.default_clip());
                FamilyParams::Product(ProductParams::fit(sample, clip))
            }
            FamilyParams::Logistic(init) => FamilyParams::Logistic(LogisticParams::fit(sample, init, opts)?),
            FamilyParams::Copula(init) => FamilyParams::Copula(CopulaParams::fit(sample, Some(init.sigma()), opts)?),
        })
    }

    /// Draws one point; the log mass is `None` for the copula.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (BinaryVector, Option<f64>) {
        match self {
            FamilyParams::Product(p) => {
                let s = p.sample(rng);
                (s.y, Some(s.log_p))
            }
            FamilyParams::Logistic(p) => {
                let s = p.sample(rng);
                (s.y, Some(s.log_p))
            }
            FamilyParams::Copula(p) => (p.sample(rng), None),
        }
    }

    pub fn log_pmf(&self, y: &BinaryVector) -> Result<f64> {
        match self {
            FamilyParams::Product(p) => p.log_pmf(y),
            FamilyParams::Logistic(p) => p.log_pmf(y),
            FamilyParams::Copula(_) => Err(Error::InvalidParams(
                "the Gaussian copula family has no pointwise mass".into(),
            )),
        }
    }

    /// Entrywise `(1 − tau)·self + tau·prev`. The copula correlation matrix is
    /// repaired after blending.
    pub fn blend(&self, prev: &FamilyParams, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Domain(format!("blend weight {tau} outside [0,1]")));
        }
        if self.dim() != prev.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: prev.dim(),
            });
        }
        let mix =
            |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (1.0 - tau) * x + tau * y).collect() };
        match (self, prev) {
            (FamilyParams::Product(a), FamilyParams::Product(b)) => {
                let mut out = a.clone();
                out.marginals_mut().copy_from_slice(&mix(a.marginals(), b.marginals()));
                Ok(FamilyParams::Product(out))
            }
            (FamilyParams::Logistic(a), FamilyParams::Logistic(b)) => {
                let mut out = a.clone();
                out.matrix_mut().copy_from_slice(&mix(a.matrix(), b.matrix()));
                Ok(FamilyParams::Logistic(out))
            }
            (FamilyParams::Copula(a), FamilyParams::Copula(b)) => Ok(FamilyParams::Copula(CopulaParams::new(
                mix(a.thresholds(), b.thresholds()),
                mix(a.sigma(), b.sigma()),
            )?)),
            _ => Err(Error::InvalidParams(format!(
                "cannot blend {} with {}",
                self.kind(),
                prev.kind()
            ))),
        }
    }

    /// Text dump: a `family=<kind>` header followed by parameter rows.
    /// Product: one row of marginals. Logistic: the matrix `A`. Copula: the
    /// thresholds, then the correlation matrix.
    pub fn dump(&self) -> String {
        let mut out = format!("family={}\n", self.kind());
        let mut row = |vals: &[f64]| {
            let line: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        };
        match self {
            FamilyParams::Product(p) => row(p.marginals()),
            FamilyParams::Logistic(p) => p.matrix().chunks(p.dim()).for_each(&mut row),
            FamilyParams::Copula(p) => {
                row(p.thresholds());
                p.sigma().chunks(p.dim()).for_each(&mut row);
            }
        }
        out
    }
}
