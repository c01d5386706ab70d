//! Fixtures shared by the kernel benchmarks.

use binopt::families::{FamilyKind, FamilyParams, FitOptions, WeightedSample};
use binopt::objective::{BinaryVector, QuadraticObjective};
use binopt::problems::{generate, Distribution, ProblemSpec};
use binopt::rng::{substream, Purpose};

/// A uniform(100) instance.
pub fn instance(dim: usize, seed: u64) -> QuadraticObjective {
    generate(&ProblemSpec::new(dim, Distribution::Uniform { c: 100 }, seed))
        .expect("valid spec")
        .obj
}

/// `n` correlated particles: draws from a logistic model fitted to a biased
/// sample, so fits have real dependencies to find.
pub fn particles(dim: usize, n: usize, seed: u64) -> Vec<BinaryVector> {
    let raw: Vec<BinaryVector> = (0..n)
        .map(|k| {
            let mut rng = substream(seed, Purpose::Sample, 0, k as u64);
            let mut x = BinaryVector::random(dim, &mut rng);
            for i in 1..dim {
                if k % 3 == 0 {
                    let prev = x.get(i - 1);
                    x.set(i, prev);
                }
            }
            x
        })
        .collect();
    let sample = WeightedSample::uniform(&raw).expect("nonempty");
    let model = FamilyParams::uniform(FamilyKind::Logistic, dim)
        .fit(&sample, &FitOptions::default())
        .expect("fit");
    (0..n)
        .map(|k| model.sample(&mut substream(seed, Purpose::Sample, 1, k as u64)).0)
        .collect()
}
