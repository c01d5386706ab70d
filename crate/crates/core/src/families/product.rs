use rand::Rng;

use super::{SampleWithMass, WeightedSample};
use crate::error::{Error, Result};
use crate::objective::BinaryVector;

/// Independent Bernoulli components with marginal vector `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductParams {
    m: Vec<f64>,
}

impl ProductParams {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::InvalidParams("empty marginal vector".into()));
        }
        if let Some(v) = m.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidParams(format!("marginal {v} outside (0,1)")));
        }
        Ok(Self { m })
    }

    pub fn uniform(dim: usize) -> Self {
        Self { m: vec![0.5; dim] }
    }

    /// Weighted sample mean, clamped to `[clip, 1 − clip]`.
    pub fn fit(sample: &WeightedSample<'_>, clip: f64) -> Self {
        let m = sample.means().into_iter().map(|v| v.clamp(clip, 1.0 - clip)).collect();
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn marginals(&self) -> &[f64] {
        &self.m
    }

    pub(crate) fn marginals_mut(&mut self) -> &mut [f64] {
        &mut self.m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleWithMass {
        let mut bits = Vec::with_capacity(self.m.len());
        let mut log_p = 0.0;
        for &mi in &self.m {
            let on = rng.random::<f64>() < mi;
            log_p += if on { mi.ln() } else { (1.0 - mi).ln() };
            bits.push(u8::from(on));
        }
        SampleWithMass {
            y: BinaryVector::new(bits).expect("bits are binary"),
            log_p,
        }
    }

    pub fn log_pmf(&self, y: &BinaryVector) -> Result<f64> {
        if y.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                found: y.len(),
            });
        }
        Ok(self.log_pmf_unchecked(y.as_slice()))
    }

    pub(crate) fn log_pmf_unchecked(&self, bits: &[u8]) -> f64 {
        self.m
            .iter()
            .zip(bits)
            .map(|(&mi, &b)| if b == 1 { mi.ln() } else { (1.0 - mi).ln() })
            .sum()
    }

    /// Logit of every marginal; the diagonal of the equivalent logistic
    /// conditionals parameter.
    pub fn logits(&self) -> Vec<f64> {
        self.m.iter().map(|&p| (p / (1.0 - p)).ln()).collect()
    }
}
