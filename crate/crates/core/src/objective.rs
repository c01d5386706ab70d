//! Quadratic pseudo-Boolean objectives `f(x) = xᵀFx` over binary vectors.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of the binary hypercube, stored as one byte per component.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Domain("binary vector must have d >= 1".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Domain(format!("binary vector entry {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn ones(dim: usize) -> Self {
        Self(vec![1; dim])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| u8::from(b)).collect())
    }

    /// Component `i` is bit `i` of `code`.
    pub fn from_code(code: u64, dim: usize) -> Self {
        Self((0..dim).map(|i| ((code >> i) & 1) as u8).collect())
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self((0..dim).map(|_| u8::from(rng.random::<bool>())).collect())
    }

    /// Inverse of [`BinaryVector::from_code`]; requires `len() <= 64`.
    pub fn code(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = u8::from(value);
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({self})")
    }
}

impl std::str::FromStr for BinaryVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Domain(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }
}

impl Serialize for BinaryVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `f(x) = xᵀFx` for a dense symmetric `F`.
///
/// Immutable after construction, so it can be shared freely between worker
/// threads.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective {
    dim: usize,
    coeffs: Vec<f64>,
}

impl QuadraticObjective {
    /// Builds an objective from a row-major `dim × dim` matrix. Asymmetric
    /// input is rejected.
    pub fn new(dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("objective dimension must be >= 1".into()));
        }
        if coeffs.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: coeffs.len(),
            });
        }
        if let Some(pos) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!(
                "coefficient ({}, {}) is not finite",
                pos / dim,
                pos % dim
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if coeffs[i * dim + j] != coeffs[j * dim + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { dim, coeffs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut coeffs = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            coeffs.extend_from_slice(row);
        }
        Self::new(dim, coeffs)
    }

    /// Builds the objective of `(G + Gᵀ)/2`, which has the same values as `G`.
    pub fn symmetrized(dim: usize, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: coeffs.len(),
            });
        }
        let mut sym = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                sym[i * dim + j] = 0.5 * (coeffs[i * dim + j] + coeffs[j * dim + i]);
            }
        }
        Self::new(dim, sym)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut coeffs = vec![0.0; dim * dim];
        for (i, &v) in diag.iter().enumerate() {
            coeffs[i * dim + i] = v;
        }
        Self::new(dim, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check_dim(&self, x: &BinaryVector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &BinaryVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value(x.as_slice()))
    }

    /// Unchecked evaluation; `bits.len()` must equal `dim()`.
    pub fn value(&self, bits: &[u8]) -> f64 {
        debug_assert_eq!(bits.len(), self.dim);
        let active: Vec<usize> = (0..self.dim).filter(|&i| bits[i] == 1).collect();
        let mut total = 0.0;
        for &i in &active {
            let row = self.row(i);
            total += active.iter().map(|&j| row[j]).sum::<f64>();
        }
        total
    }

    /// `f(x ⊕ e_i) − f(x)`.
    pub fn flip_delta(&self, x: &BinaryVector, i: usize) -> Result<f64> {
        self.check_dim(x)?;
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim,
            });
        }
        Ok(self.flip_gain(x.as_slice(), i))
    }

    /// Unchecked O(d) single-flip delta.
    #[inline]
    pub fn flip_gain(&self, bits: &[u8], i: usize) -> f64 {
        let row = self.row(i);
        let mut s = 0.0;
        for (j, (&b, &c)) in bits.iter().zip(row).enumerate() {
            if b == 1 && j != i {
                s += c;
            }
        }
        let s = 2.0 * s + row[i];
        if bits[i] == 1 {
            -s
        } else {
            s
        }
    }

    /// All `d` single-flip deltas at `bits`.
    pub fn flip_gains(&self, bits: &[u8]) -> Vec<f64> {
        (0..self.dim).map(|i| self.flip_gain(bits, i)).collect()
    }

    /// Updates `gains` in O(d) after bit `i` of `bits` has been flipped.
    ///
    /// `bits` must already hold the new state.
    pub fn update_gains_after_flip(&self, bits: &[u8], gains: &mut [f64], i: usize) {
        let row = self.row(i);
        let si = if bits[i] == 1 { 1.0 } else { -1.0 };
        for (j, g) in gains.iter_mut().enumerate() {
            if j == i {
                *g = -*g;
            } else {
                let sj = if bits[j] == 1 { -1.0 } else { 1.0 };
                *g += 2.0 * row[j] * si * sj;
            }
        }
    }

    /// `Σ_{γ ∈ 𝔹^d} γᵀFγ = 2^{d−2}(1ᵀF1 + tr F)`.
    pub fn quadratic_mass_normalizer(&self) -> f64 {
        let total: f64 = self.coeffs.iter().sum();
        let trace: f64 = (0..self.dim).map(|i| self.coeff(i, i)).sum();
        2f64.powi(self.dim as i32 - 2) * (total + trace)
    }
}
