//! Exhaustive maximization by Gray-code enumeration.

use crate::error::{Error, Result};
use crate::objective::{BinaryVector, QuadraticObjective};

/// Largest number of free components enumerated.
pub const MAX_BRUTE_FORCE_DIM: usize = 25;

/// Exact global maximizer; ties go to the lexicographically smallest vector.
pub fn brute_force(obj: &QuadraticObjective) -> Result<(BinaryVector, f64)> {
    let free: Vec<usize> = (0..obj.dim()).collect();
    brute_force_restricted(obj, &BinaryVector::zeros(obj.dim()), &free)
}

/// Maximizes over the components in `free` with every other component
/// pinned to its value in `base`. Ties go to the lexicographically smallest
/// vector.
pub fn brute_force_restricted(
    obj: &QuadraticObjective,
    base: &BinaryVector,
    free: &[usize],
) -> Result<(BinaryVector, f64)> {
    let d = obj.dim();
    if base.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: base.len(),
        });
    }
    if free.len() > MAX_BRUTE_FORCE_DIM {
        return Err(Error::Guard {
            what: "brute-force dimension",
            value: free.len(),
            limit: MAX_BRUTE_FORCE_DIM,
        });
    }
    if let Some(&i) = free.iter().find(|&&i| i >= d) {
        return Err(Error::IndexOutOfRange { index: i, dim: d });
    }
    let mut bits = base.as_slice().to_vec();
    for &i in free {
        bits[i] = 0;
    }
    let mut value = obj.value(&bits);
    let mut gains = obj.flip_gains(&bits);
    let mut best_bits = bits.clone();
    let mut best = value;
    for g in 1u64..1u64 << free.len() {
        let i = free[g.trailing_zeros() as usize];
        value += gains[i];
        bits[i] ^= 1;
        obj.update_gains_after_flip(&bits, &mut gains, i);
        if value > best || (value == best && bits < best_bits) {
            best = value;
            best_bits.copy_from_slice(&bits);
        }
    }
    let x = BinaryVector::new(best_bits).expect("bits are binary");
    let f = obj.value(x.as_slice());
    Ok((x, f))
}

/// Whether no single flip strictly improves `x`.
pub fn is_one_opt(obj: &QuadraticObjective, x: &BinaryVector) -> bool {
    (0..obj.dim()).all(|i| obj.flip_gain(x.as_slice(), i) <= 0.0)
}
