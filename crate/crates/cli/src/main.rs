use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binopt::error::{Error, Result};
use binopt::experiment::{
    brute_force, histogram, load_records, ratios_by_algorithm, run_suite, save_records, AlgorithmConfig, BestKnown,
    Pooling, Suite, SuiteAlgorithm, SuiteProblem,
};
use binopt::problems::{generate, Distribution, ProblemInstance, ProblemSpec};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "binopt", version, about = "Binary quadratic optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Shifted,
    Density,
    Cauchy,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random problem instance.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum)]
        dist: DistArg,
        #[arg(long, default_value_t = 100)]
        c: i64,
        /// Support shift, required for `shifted`.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<i64>,
        /// Nonzero fraction, required for `density`.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm repeatedly on a problem.
    Run {
        #[arg(long)]
        problem: PathBuf,
        /// One of smc, smc-local, ce, sa, ls.
        #[arg(long)]
        algo: String,
        /// key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Records file; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out_records: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Best-known values file, read and updated.
        #[arg(long)]
        best_known: Option<PathBuf>,
    },
    /// Bin the relative ratios of recorded runs.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        bins: usize,
        #[arg(long)]
        out_hist: PathBuf,
        #[arg(long)]
        best_known: Option<PathBuf>,
        /// Take the worst value over each algorithm's own runs.
        #[arg(long)]
        per_algorithm: bool,
    },
    /// Exact maximizer by enumeration (at most 25 variables).
    Oracle {
        #[arg(long)]
        problem: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() {
                2
            } else if e.is_guard() {
                3
            } else {
                1
            })
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            dim,
            dist,
            c,
            tau,
            omega,
            seed,
            out,
        } => {
            let missing = |flag: &str| Error::Validation(format!("--{flag} is required for this distribution"));
            let dist = match dist {
                DistArg::Uniform => Distribution::Uniform { c },
                DistArg::Shifted => Distribution::Shifted {
                    c,
                    tau: tau.ok_or_else(|| missing("tau"))?,
                },
                DistArg::Density => Distribution::Density {
                    c,
                    omega: omega.ok_or_else(|| missing("omega"))?,
                },
                DistArg::Cauchy => Distribution::Cauchy { c },
            };
            let inst = generate(&ProblemSpec::new(dim, dist, seed))?;
            inst.save(&out)?;
            println!("wrote {} ({})", out.display(), inst.spec.label());
            Ok(())
        }
        Command::Run {
            problem,
            algo,
            config,
            repeats,
            seed,
            out_records,
            workers,
            best_known,
        } => {
            let instance = ProblemInstance::load(&problem)?;
            let dim = instance.obj.dim();
            let config = match &config {
                Some(path) => AlgorithmConfig::parse(&algo, dim, &fs::read_to_string(path)?, path)?,
                None => AlgorithmConfig::default_for(&algo, dim)?,
            };
            let prior = match &best_known {
                Some(path) => BestKnown::load(path)?,
                None => BestKnown::default(),
            };
            let suite = Suite {
                problems: vec![SuiteProblem {
                    id: problem_id(&problem),
                    instance,
                }],
                algorithms: vec![SuiteAlgorithm { id: algo, config }],
                repeats,
                seed,
                workers,
                n_bins: 5,
                pooling: Pooling::Joint,
            };
            let outcome = run_suite(&suite, &prior)?;
            for f in &outcome.failures {
                eprintln!(
                    "run {} of {} on {} failed: {}",
                    f.repeat, f.algorithm, f.problem, f.message
                );
            }
            for r in &outcome.records {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{:.3}s",
                    r.problem, r.algorithm, r.seed, r.best_f, r.evaluations, r.wall_seconds
                );
            }
            save_records(&out_records, &outcome.records)?;
            if let Some(path) = &best_known {
                outcome.best_known.update_file(path)?;
            }
            Ok(())
        }
        Command::Report {
            records,
            bins,
            out_hist,
            best_known,
            per_algorithm,
        } => {
            let mut all = Vec::new();
            for path in &records {
                all.extend(load_records(path)?);
            }
            let known = match &best_known {
                Some(path) => BestKnown::load(path)?,
                None => BestKnown::default(),
            };
            let pooling = if per_algorithm {
                Pooling::PerAlgorithm
            } else {
                Pooling::Joint
            };
            let report = histogram(&ratios_by_algorithm(&all, &known, pooling)?, bins)?;
            let table = report.to_tsv();
            fs::write(&out_hist, &table)?;
            print!("{table}");
            Ok(())
        }
        Command::Oracle { problem } => {
            let inst = ProblemInstance::load(&problem)?;
            let (x, f) = brute_force(&inst.obj)?;
            println!("{x}\t{f}");
            Ok(())
        }
    }
}

fn problem_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
