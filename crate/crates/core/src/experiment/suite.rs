use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::AlgorithmConfig;
use super::report::{histogram, relative_ratios, HistogramReport};
use crate::error::{Error, Result};
use crate::oracle::{brute_force, MAX_BRUTE_FORCE_DIM};
use crate::problems::ProblemInstance;
use crate::record::RunRecord;
use crate::rng::{hash_str, mix};

#[derive(Clone, Debug)]
pub struct SuiteProblem {
    pub id: String,
    pub instance: ProblemInstance,
}

#[derive(Clone, Debug)]
pub struct SuiteAlgorithm {
    pub id: String,
    pub config: AlgorithmConfig,
}

/// Which runs define the worst value when computing ratios on a problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pooling {
    /// Worst over every algorithm's runs on the problem.
    #[default]
    Joint,
    /// Worst over the algorithm's own runs only.
    PerAlgorithm,
}

#[derive(Clone, Debug)]
pub struct Suite {
    pub problems: Vec<SuiteProblem>,
    pub algorithms: Vec<SuiteAlgorithm>,
    pub repeats: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub n_bins: usize,
    pub pooling: Pooling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteFailure {
    pub problem: String,
    pub algorithm: String,
    pub repeat: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    /// Sorted by problem, algorithm and repeat.
    pub records: Vec<RunRecord>,
    pub failures: Vec<SuiteFailure>,
    pub best_known: BestKnown,
    pub report: Option<HistogramReport>,
}

/// Seed of one suite cell.
pub fn cell_seed(suite_seed: u64, problem: &str, algorithm: &str, repeat: usize) -> u64 {
    mix(&[suite_seed, hash_str(problem), hash_str(algorithm), repeat as u64])
}

/// Runs every (problem, algorithm, repeat) cell. Configuration errors abort
/// before any run; failures of individual runs are collected instead.
pub fn run_suite(suite: &Suite, prior: &BestKnown) -> Result<SuiteOutcome> {
    for p in &suite.problems {
        for a in &suite.algorithms {
            a.config.validate(p.instance.obj.dim())?;
        }
    }
    let mut problems: Vec<&SuiteProblem> = suite.problems.iter().collect();
    problems.sort_by(|a, b| a.id.cmp(&b.id));
    let mut algorithms: Vec<&SuiteAlgorithm> = suite.algorithms.iter().collect();
    algorithms.sort_by(|a, b| a.id.cmp(&b.id));
    let cells: Vec<(&SuiteProblem, &SuiteAlgorithm, usize)> = problems
        .iter()
        .flat_map(|&p| {
            algorithms
                .iter()
                .flat_map(move |&a| (0..suite.repeats).map(move |r| (p, a, r)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(suite.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let (results, oracle): (Vec<_>, Vec<_>) = pool.install(|| {
        let results: Vec<_> = cells
            .par_iter()
            .map(|&(p, a, r)| {
                let seed = cell_seed(suite.seed, &p.id, &a.id, r);
                a.config.with_seed(seed).run(&p.instance.obj).map(|mut rec| {
                    rec.algorithm = a.id.clone();
                    rec.problem = p.id.clone();
                    rec
                })
            })
            .collect();
        let oracle: Vec<_> = problems
            .par_iter()
            .filter(|p| p.instance.obj.dim() <= MAX_BRUTE_FORCE_DIM)
            .map(|p| brute_force(&p.instance.obj).map(|(_, f)| (p.id.clone(), f)))
            .collect();
        (results, oracle)
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (res, &(p, a, r)) in results.into_iter().zip(&cells) {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(SuiteFailure {
                problem: p.id.clone(),
                algorithm: a.id.clone(),
                repeat: r,
                message: e.to_string(),
            }),
        }
    }
    let mut best_known = prior.clone();
    for entry in oracle {
        let (id, f) = entry?;
        best_known.offer(&id, f);
    }
    for rec in &records {
        best_known.offer(&rec.problem, rec.best_f);
    }
    let report = if records.is_empty() {
        None
    } else {
        let ratios = ratios_by_algorithm(&records, &best_known, suite.pooling)?;
        Some(histogram(&ratios, suite.n_bins)?)
    };
    Ok(SuiteOutcome {
        records,
        failures,
        best_known,
        report,
    })
}

/// Relative ratios of every record, computed per problem and grouped by
/// algorithm in order of first appearance.
pub fn ratios_by_algorithm(
    records: &[RunRecord],
    best_known: &BestKnown,
    pooling: Pooling,
) -> Result<Vec<(String, Vec<f64>)>> {
    let mut algorithms: Vec<String> = Vec::new();
    for r in records {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
    }
    let mut by_problem: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_problem.entry(&r.problem).or_default().push(r);
    }
    let mut out: Vec<(String, Vec<f64>)> = algorithms.iter().map(|a| (a.clone(), Vec::new())).collect();
    for (problem, recs) in by_problem {
        let observed = recs.iter().map(|r| r.best_f).fold(f64::NEG_INFINITY, f64::max);
        let best = best_known.get(problem).map_or(observed, |b| b.max(observed));
        let groups: Vec<Vec<&RunRecord>> = match pooling {
            Pooling::Joint => vec![recs],
            Pooling::PerAlgorithm => algorithms
                .iter()
                .map(|a| recs.iter().copied().filter(|r| &r.algorithm == a).collect())
                .collect(),
        };
        for group in groups {
            let values: Vec<f64> = group.iter().map(|r| r.best_f).collect();
            let ratios = relative_ratios(&values, best)?;
            for (r, q) in group.iter().zip(ratios) {
                let a = algorithms
                    .iter()
                    .position(|a| a == &r.algorithm)
                    .expect("collected above");
                out[a].1.push(q);
            }
        }
    }
    Ok(out)
}

/// Highest objective value ever recorded per problem, persisted as
/// `problem<TAB>value` lines and only ever raised.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BestKnown {
    values: BTreeMap<String, f64>,
}

impl BestKnown {
    pub fn get(&self, problem: &str) -> Option<f64> {
        self.values.get(problem).copied()
    }

    /// Records `f` if it beats the stored value.
    pub fn offer(&mut self, problem: &str, f: f64) {
        let entry = self.values.entry(problem.to_string()).or_insert(f);
        if f > *entry {
            *entry = f;
        }
    }

    pub fn merge(&mut self, other: &BestKnown) {
        for (p, &f) in &other.values {
            self.offer(p, f);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(p, &f)| (p.as_str(), f))
    }

    /// Loads the file, or an empty table when it does not exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Ok(Self::default());
        }
        let mut out = Self::default();
        for (idx, line) in fs::read_to_string(path)?.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .split_once('\t')
                .and_then(|(p, v)| v.trim().parse::<f64>().ok().map(|v| (p.trim(), v)));
            let (p, v) = parsed.ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("expected 'problem<TAB>value', found '{line}'"),
            })?;
            out.offer(p, v);
        }
        Ok(out)
    }

    /// Merges with the file's current contents and writes the result back.
    pub fn update_file(&self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut merged = Self::load(path)?;
        merged.merge(self);
        let body: String = merged.iter().map(|(p, f)| format!("{p}\t{f}\n")).collect();
        fs::write(path, body)?;
        Ok(merged)
    }
}

/// Writes records as JSON when the extension is `.json`, else as CSV.
pub fn save_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    if is_json(path) {
        fs::write(path, serde_json::to_string_pretty(records)?)?;
    } else {
        let mut w = csv::Writer::from_path(path)?;
        for r in records {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    if is_json(path) {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    } else {
        let mut r = csv::Reader::from_path(path)?;
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{Budget, LsConfig};
    use crate::objective::BinaryVector;
    use crate::problems::{generate, Distribution, ProblemSpec};
    use crate::smc::SmcConfig;

    fn problem(id: &str, d: usize, seed: u64) -> SuiteProblem {
        SuiteProblem {
            id: id.into(),
            instance: generate(&ProblemSpec::new(d, Distribution::Uniform { c: 100 }, seed)).unwrap(),
        }
    }

    fn small_suite(workers: usize) -> Suite {
        Suite {
            problems: vec![problem("p1", 15, 1), problem("p0", 15, 2)],
            algorithms: vec![
                SuiteAlgorithm {
                    id: "smc".into(),
                    config: AlgorithmConfig::Smc(SmcConfig {
                        n: 200,
                        ..SmcConfig::default()
                    }),
                },
                SuiteAlgorithm {
                    id: "ls".into(),
                    config: AlgorithmConfig::Ls(LsConfig {
                        budget: Budget::Evaluations(2000),
                        ..LsConfig::default()
                    }),
                },
            ],
            repeats: 3,
            seed: 11,
            workers,
            n_bins: 5,
            pooling: Pooling::Joint,
        }
    }

    #[test]
    fn cardinality_order_and_oracle() {
        let suite = small_suite(2);
        let out = run_suite(&suite, &BestKnown::default()).unwrap();
        assert_eq!(out.records.len(), 12);
        assert!(out.failures.is_empty());
        let keys: Vec<(String, String)> = out
            .records
            .iter()
            .map(|r| (r.problem.clone(), r.algorithm.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for p in &suite.problems {
            let (_, f) = brute_force(&p.instance.obj).unwrap();
            assert_eq!(out.best_known.get(&p.id), Some(f));
        }
        let report = out.report.unwrap();
        assert_eq!(report.total(0) + report.total(1), 12);
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let a = run_suite(&small_suite(1), &BestKnown::default()).unwrap();
        let b = run_suite(&small_suite(8), &BestKnown::default()).unwrap();
        let c = run_suite(&small_suite(1), &BestKnown::default()).unwrap();
        for ((x, y), z) in a.records.iter().zip(&b.records).zip(&c.records) {
            assert!(x.same_outcome(y) && x.same_outcome(z));
        }
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn failures_are_recorded() {
        // Objective values overflow to ±∞, which annihilates every importance
        // weight; the other problem runs normally.
        let d = 30;
        let coeffs = (0..d * d)
            .map(|k| if (k / d + k % d) % 2 == 0 { 1e306 } else { -1e306 })
            .collect();
        let overflow = ProblemInstance::custom(crate::objective::QuadraticObjective::new(d, coeffs).unwrap());
        let mut suite = small_suite(1);
        suite.problems = vec![
            problem("big", d, 3),
            SuiteProblem {
                id: "overflow".into(),
                instance: overflow,
            },
        ];
        suite.algorithms = vec![SuiteAlgorithm {
            id: "smc".into(),
            config: AlgorithmConfig::Smc(SmcConfig {
                n: 50,
                ..SmcConfig::default()
            }),
        }];
        let out = run_suite(&suite, &BestKnown::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.records.iter().all(|r| r.problem == "big"));
        assert_eq!(out.failures.len(), 3);
        assert!(out.failures.iter().all(|f| f.problem == "overflow"));
        assert_eq!(out.report.unwrap().total(0), 3);
    }

    #[test]
    fn invalid_config_aborts() {
        let mut suite = small_suite(1);
        suite.algorithms[0].config = AlgorithmConfig::Smc(SmcConfig {
            n: 1,
            ..SmcConfig::default()
        });
        assert!(run_suite(&suite, &BestKnown::default()).unwrap_err().is_validation());
    }

    #[test]
    fn best_known_persists_monotonically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("best.tsv");
        let mut a = BestKnown::default();
        a.offer("p", 10.0);
        a.offer("q", -3.5);
        a.update_file(&path).unwrap();
        let mut b = BestKnown::default();
        b.offer("p", 7.0);
        b.offer("r", 1.0);
        let merged = b.update_file(&path).unwrap();
        assert_eq!(merged.get("p"), Some(10.0));
        assert_eq!(BestKnown::load(&path).unwrap(), merged);
        assert_eq!(
            BestKnown::load(dir.path().join("missing")).unwrap(),
            BestKnown::default()
        );
    }

    #[test]
    fn stale_prior_is_raised_not_trusted() {
        let mut prior = BestKnown::default();
        prior.offer("p0", -1e9);
        let out = run_suite(&small_suite(1), &prior).unwrap();
        assert!(out.best_known.get("p0").unwrap() > -1e9);
    }

    #[test]
    fn pooling_modes() {
        let rec = |alg: &str, f: f64| RunRecord {
            algorithm: alg.into(),
            problem: "p".into(),
            seed: 0,
            best_x: BinaryVector::zeros(1),
            best_f: f,
            evaluations: 0,
            wall_seconds: 0.0,
            iterations: 0,
        };
        let records = vec![rec("a", 0.0), rec("a", 10.0), rec("b", 5.0), rec("b", 10.0)];
        let joint = ratios_by_algorithm(&records, &BestKnown::default(), Pooling::Joint).unwrap();
        assert_eq!(joint, vec![("a".into(), vec![0.0, 1.0]), ("b".into(), vec![0.5, 1.0])]);
        let own = ratios_by_algorithm(&records, &BestKnown::default(), Pooling::PerAlgorithm).unwrap();
        assert_eq!(own[1], ("b".into(), vec![0.0, 1.0]));
    }

    #[test]
    fn record_files_round_trip() {
        let out = run_suite(&small_suite(1), &BestKnown::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for name in ["r.csv", "r.json"] {
            let path = dir.path().join(name);
            save_records(&path, &out.records).unwrap();
            assert_eq!(load_records(&path).unwrap(), out.records);
        }
    }
}
