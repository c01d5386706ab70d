use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::objective::BinaryVector;

/// A weighted particle sample `(w, X)` used to fit a parametric family.
#[derive(Clone, Debug)]
pub struct WeightedSample<'a> {
    particles: &'a [BinaryVector],
    weights: Cow<'a, [f64]>,
}

impl<'a> WeightedSample<'a> {
    pub fn new(particles: &'a [BinaryVector], weights: &'a [f64]) -> Result<Self> {
        Self::build(particles, Cow::Borrowed(weights))
    }

    pub fn uniform(particles: &'a [BinaryVector]) -> Result<Self> {
        let n = particles.len().max(1);
        Self::build(particles, Cow::Owned(vec![1.0 / n as f64; particles.len()]))
    }

    /// Takes arbitrary nonnegative weights and normalizes them.
    pub fn normalized(particles: &'a [BinaryVector], weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::DegenerateWeights);
        }
        let w = weights.iter().map(|w| w / total).collect::<Vec<_>>();
        Self::build(particles, Cow::Owned(w))
    }

    fn build(particles: &'a [BinaryVector], weights: Cow<'a, [f64]>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Domain("weighted sample needs at least one particle".into()));
        }
        if particles.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: particles.len(),
                found: weights.len(),
            });
        }
        let dim = particles[0].len();
        if let Some(p) = particles.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { particles, weights })
    }

    pub fn particles(&self) -> &[BinaryVector] {
        self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].len()
    }

    /// Default marginal clip `max(1/(2n), 1e-6)`.
    pub fn default_clip(&self) -> f64 {
        (0.5 / self.len() as f64).max(1e-6)
    }

    /// Weighted first moments `x̄_i`.
    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (x, &w) in self.particles.iter().zip(self.weights.iter()) {
            if w == 0.0 {
                continue;
            }
            for (mi, &b) in m.iter_mut().zip(x.as_slice()) {
                if b == 1 {
                    *mi += w;
                }
            }
        }
        m
    }

    /// Weighted second moments `x̄_ij`, row-major `d × d` (diagonal = means).
    pub fn second_moments(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d * d];
        let mut active = Vec::with_capacity(d);
        for (x, &w) in self.particles.iter().zip(self.weights.iter()) {
            if w == 0.0 {
                continue;
            }
            active.clear();
            active.extend((0..d).filter(|&i| x.get(i)));
            for &i in &active {
                for &j in &active {
                    m[i * d + j] += w;
                }
            }
        }
        m
    }

    /// Weighted correlation matrix of the columns; zero wherever a column is
    /// constant.
    pub fn correlations(&self) -> Vec<f64> {
        let d = self.dim();
        let m2 = self.second_moments();
        let var: Vec<f64> = (0..d).map(|i| m2[i * d + i] * (1.0 - m2[i * d + i])).collect();
        let mut corr = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                corr[i * d + j] = if i == j {
                    1.0
                } else if var[i] <= 0.0 || var[j] <= 0.0 {
                    0.0
                } else {
                    let cov = m2[i * d + j] - m2[i * d + i] * m2[j * d + j];
                    (cov / (var[i] * var[j]).sqrt()).clamp(-1.0, 1.0)
                };
            }
        }
        corr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(bits: &[u8]) -> BinaryVector {
        BinaryVector::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn moments_of_small_sample() {
        let xs = vec![bv(&[1, 1]), bv(&[0, 1])];
        let w = [0.75, 0.25];
        let s = WeightedSample::new(&xs, &w).unwrap();
        assert_eq!(s.means(), vec![0.75, 1.0]);
        assert_eq!(s.second_moments(), vec![0.75, 0.75, 0.75, 1.0]);
        // Constant second column has no correlation.
        assert_eq!(s.correlations()[1], 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        let xs = vec![bv(&[1, 1]), bv(&[0, 1])];
        assert!(WeightedSample::new(&xs, &[0.5, 0.6]).is_err());
        assert!(WeightedSample::new(&xs, &[1.0]).is_err());
        assert!(WeightedSample::new(&xs, &[1.5, -0.5]).is_err());
        assert!(WeightedSample::new(&[], &[]).is_err());
        assert!(WeightedSample::normalized(&xs, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn perfectly_correlated_columns() {
        let xs = vec![bv(&[1, 1]), bv(&[0, 0])];
        let s = WeightedSample::uniform(&xs).unwrap();
        assert!((s.correlations()[1] - 1.0).abs() < 1e-12);
    }
}
