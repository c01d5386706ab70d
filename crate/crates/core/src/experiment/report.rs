//! Relative ratios and the descending singleton/interval histogram.

use crate::error::{Error, Result};

/// `ϱ_k = (f_k − worst)/(best_known − worst)` with `worst = min f_k`. When
/// every value equals the best known one all ratios are 1.
pub fn relative_ratios(values: &[f64], best_known: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top > best_known {
        return Err(Error::Validation(format!(
            "best known value {best_known} is below an observed value {top}"
        )));
    }
    if best_known == worst {
        return Ok(vec![1.0; values.len()]);
    }
    Ok(values.iter().map(|f| (f - worst) / (best_known - worst)).collect())
}

/// Counts per algorithm in `n` singleton bins for the highest distinct
/// ratios followed by `n` equal intervals below the smallest singleton.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramReport {
    pub n_bins: usize,
    pub algorithms: Vec<String>,
    /// Strictly decreasing.
    pub singletons: Vec<f64>,
    /// `singleton_counts[b][a]`: runs of algorithm `a` in singleton `b`.
    pub singleton_counts: Vec<Vec<u64>>,
    /// Half-open `[lo, hi)` intervals in decreasing order.
    pub intervals: Vec<(f64, f64)>,
    pub interval_counts: Vec<Vec<u64>>,
}

impl HistogramReport {
    /// Runs counted for algorithm `a` across all bins.
    pub fn total(&self, a: usize) -> u64 {
        self.singleton_counts
            .iter()
            .chain(&self.interval_counts)
            .map(|row| row[a])
            .sum()
    }

    /// Tab-separated table, one column per algorithm, bins in descending
    /// order; interval bins are labelled `<` plus their lower bound.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin");
        for a in &self.algorithms {
            out.push('\t');
            out.push_str(a);
        }
        out.push('\n');
        let rows = self
            .singletons
            .iter()
            .map(|v| format!("{v:.4}"))
            .zip(&self.singleton_counts)
            .chain(
                self.intervals
                    .iter()
                    .map(|(lo, _)| format!("<{lo:.4}"))
                    .zip(&self.interval_counts),
            );
        for (label, counts) in rows {
            out.push_str(&label);
            for c in counts {
                out.push_str(&format!("\t{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Bins the ratios of every algorithm on a grid derived from the pooled
/// ratios.
pub fn histogram(ratios: &[(String, Vec<f64>)], n_bins: usize) -> Result<HistogramReport> {
    if ratios.is_empty() || ratios.iter().any(|(_, r)| r.is_empty()) {
        return Err(Error::Validation(
            "histogram needs at least one ratio per algorithm".into(),
        ));
    }
    if n_bins == 0 {
        return Err(Error::Validation("n_bins must be at least 1".into()));
    }
    if ratios.iter().flat_map(|(_, r)| r).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Validation("ratios must lie in [0, 1]".into()));
    }
    let mut pooled: Vec<f64> = ratios.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    pooled.sort_by(|a, b| b.total_cmp(a));
    pooled.dedup();
    pooled.truncate(n_bins);
    let singletons = pooled;
    let floor = *singletons.last().expect("nonempty");
    let n = n_bins as f64;
    let intervals: Vec<(f64, f64)> = (1..=n_bins)
        .map(|k| ((n - k as f64) / n * floor, (n - k as f64 + 1.0) / n * floor))
        .collect();

    let n_alg = ratios.len();
    let mut singleton_counts = vec![vec![0u64; n_alg]; singletons.len()];
    let mut interval_counts = vec![vec![0u64; n_alg]; n_bins];
    for (a, (_, rs)) in ratios.iter().enumerate() {
        for &r in rs {
            if let Some(b) = singletons.iter().position(|&s| s == r) {
                singleton_counts[b][a] += 1;
            } else {
                // r < floor here, so some interval holds it.
                let b = intervals
                    .iter()
                    .position(|&(lo, hi)| r >= lo && r < hi)
                    .unwrap_or(n_bins - 1);
                interval_counts[b][a] += 1;
            }
        }
    }
    Ok(HistogramReport {
        n_bins,
        algorithms: ratios.iter().map(|(a, _)| a.clone()).collect(),
        singletons,
        singleton_counts,
        intervals,
        interval_counts,
    })
}
