//! Flat `key=value` configuration files.
//!
//! Blank lines and `#` comments are ignored. A key may carry an algorithm
//! prefix such as `ce.beta=0.9`; prefixed keys for other algorithms are
//! skipped so one file can configure a whole comparison.

use std::path::Path;
use std::str::FromStr;

use crate::baselines::{ce_optimize, local_search_kopt, sa_optimize, Budget, CeConfig, LsConfig, SaConfig};
use crate::error::{Error, Result};
use crate::families::{FamilyKind, FitOptions};
use crate::objective::QuadraticObjective;
use crate::record::RunRecord;
use crate::smc::{smc_optimize, Kernel, SmcConfig};

pub const ALGORITHMS: [&str; 5] = ["smc", "smc-local", "ce", "sa", "ls"];

#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmConfig {
    Smc(SmcConfig),
    Ce(CeConfig),
    Sa(SaConfig),
    Ls(LsConfig),
}

impl AlgorithmConfig {
    /// Defaults for one of [`ALGORITHMS`]. `smc-local` is the SMC optimizer
    /// with the single-flip symmetric kernel in batches of 10 moves.
    pub fn default_for(algo: &str, dim: usize) -> Result<Self> {
        Ok(match algo {
            "smc" => AlgorithmConfig::Smc(SmcConfig::default()),
            "smc-local" => AlgorithmConfig::Smc(SmcConfig {
                kernel: Kernel::single_flip(dim),
                move_batch: Some(10),
                ..SmcConfig::default()
            }),
            "ce" => AlgorithmConfig::Ce(CeConfig::default()),
            "sa" => AlgorithmConfig::Sa(SaConfig::default()),
            "ls" => AlgorithmConfig::Ls(LsConfig::default()),
            _ => {
                return Err(Error::Validation(format!(
                    "unknown algorithm '{algo}', expected one of {}",
                    ALGORITHMS.join(", ")
                )))
            }
        })
    }

    /// Defaults for `algo` overridden by the entries of `text`; `path` only
    /// labels error messages.
    pub fn parse(algo: &str, dim: usize, text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default_for(algo, dim)?;
        let prefix = if algo == "smc-local" { "smc" } else { algo };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = match key.split_once('.') {
                Some((p, k)) if p == prefix || p == algo => k,
                Some((p, _)) if ALGORITHMS.contains(&p) => continue,
                Some(_) => return Err(err(format!("unknown key '{key}'"))),
                None => key,
            };
            cfg.set(key, value, dim).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, dim: usize) -> std::result::Result<(), String> {
        match self {
            AlgorithmConfig::Smc(c) => set_smc(c, key, value, dim),
            AlgorithmConfig::Ce(c) => set_ce(c, key, value),
            AlgorithmConfig::Sa(c) => set_sa(c, key, value),
            AlgorithmConfig::Ls(c) => set_ls(c, key, value),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            AlgorithmConfig::Smc(c) => c.seed,
            AlgorithmConfig::Ce(c) => c.seed,
            AlgorithmConfig::Sa(c) => c.seed,
            AlgorithmConfig::Ls(c) => c.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        match &mut cfg {
            AlgorithmConfig::Smc(c) => c.seed = seed,
            AlgorithmConfig::Ce(c) => c.seed = seed,
            AlgorithmConfig::Sa(c) => c.seed = seed,
            AlgorithmConfig::Ls(c) => c.seed = seed,
        }
        cfg
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            AlgorithmConfig::Smc(c) => c.validate(dim),
            AlgorithmConfig::Ce(c) => c.validate(),
            AlgorithmConfig::Sa(c) => c.validate(),
            AlgorithmConfig::Ls(c) => c.validate(dim),
        }
    }

    pub fn run(&self, obj: &QuadraticObjective) -> Result<RunRecord> {
        match self {
            AlgorithmConfig::Smc(c) => smc_optimize(obj, c),
            AlgorithmConfig::Ce(c) => ce_optimize(obj, c),
            AlgorithmConfig::Sa(c) => sa_optimize(obj, c),
            AlgorithmConfig::Ls(c) => local_search_kopt(obj, c),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value '{value}' for '{key}'"))
}

/// `auto` (or `none`) selects the built-in default.
fn parse_opt<T: FromStr>(key: &str, value: &str) -> std::result::Result<Option<T>, String> {
    match value {
        "auto" | "none" => Ok(None),
        _ => parse(key, value).map(Some),
    }
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("invalid value '{value}' for '{key}'")),
    }
}

fn set_fit(fit: &mut FitOptions, key: &str, value: &str) -> std::result::Result<bool, String> {
    match key {
        "clip" => fit.clip = parse_opt(key, value)?,
        "penalty" => fit.penalty = parse(key, value)?,
        "newton_tol" => fit.newton_tol = parse(key, value)?,
        "fit_max_iter" => fit.max_iter = parse(key, value)?,
        "corr_screen" => fit.corr_screen = parse(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_budget(budget: &mut Budget, key: &str, value: &str) -> std::result::Result<bool, String> {
    match key {
        "budget_evaluations" => *budget = Budget::Evaluations(parse(key, value)?),
        "budget_seconds" => *budget = Budget::Seconds(parse(key, value)?),
        _ => return Ok(false),
    }
    Ok(true)
}

fn unknown(key: &str) -> std::result::Result<(), String> {
    Err(format!("unknown key '{key}'"))
}

fn set_smc(c: &mut SmcConfig, key: &str, value: &str, dim: usize) -> std::result::Result<(), String> {
    match key {
        "n" => c.n = parse(key, value)?,
        "beta" => c.beta = parse(key, value)?,
        "zeta_star" => c.zeta_star = parse(key, value)?,
        "zeta_delta_star" => c.zeta_delta_star = parse(key, value)?,
        "delta_term" => c.delta_term = parse(key, value)?,
        "d_star" => c.d_star = parse(key, value)?,
        "move_batch" => c.move_batch = parse_opt(key, value)?,
        "kernel" => {
            c.kernel = match value {
                "adaptive_logistic" => Kernel::AdaptiveLogistic,
                "adaptive_product" => Kernel::AdaptiveProduct,
                "symmetric" => match &c.kernel {
                    Kernel::Symmetric(p) => Kernel::Symmetric(p.clone()),
                    _ => Kernel::single_flip(dim),
                },
                _ => return Err(format!("invalid value '{value}' for 'kernel'")),
            }
        }
        "flip_weights" => {
            let p = value
                .split(',')
                .map(|v| parse::<f64>(key, v.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            c.kernel = Kernel::Symmetric(p);
        }
        "seq" => c.seq = parse(key, value)?,
        "seed" => c.seed = parse(key, value)?,
        "max_iters" => c.max_iters = parse(key, value)?,
        "alpha_max" => c.alpha_max = parse_opt(key, value)?,
        "step_tol" => c.step_tol = parse(key, value)?,
        "polish" => c.polish = parse_bool(key, value)?,
        "verbose" => c.verbose = parse_bool(key, value)?,
        _ if set_fit(&mut c.fit, key, value)? => {}
        _ => return unknown(key),
    }
    Ok(())
}

fn set_ce(c: &mut CeConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "n" => c.n = parse(key, value)?,
        "beta" => c.beta = parse(key, value)?,
        "tau" => c.tau = parse(key, value)?,
        "family" => c.family = parse::<FamilyKind>(key, value)?,
        "max_iters" => c.max_iters = parse(key, value)?,
        "stagnation_limit" => c.stagnation_limit = parse(key, value)?,
        "d_star" => c.d_star = parse(key, value)?,
        "seed" => c.seed = parse(key, value)?,
        "verbose" => c.verbose = parse_bool(key, value)?,
        _ if set_fit(&mut c.fit, key, value)? => {}
        _ => return unknown(key),
    }
    Ok(())
}

fn set_sa(c: &mut SaConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "window" => c.window = parse(key, value)?,
        "gain" => c.gain = parse(key, value)?,
        "rho0" => c.rho0 = parse_opt(key, value)?,
        "seed" => c.seed = parse(key, value)?,
        "verbose" => c.verbose = parse_bool(key, value)?,
        _ if set_budget(&mut c.budget, key, value)? => {}
        _ => return unknown(key),
    }
    Ok(())
}

fn set_ls(c: &mut LsConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "k" => c.k = parse(key, value)?,
        "seed" => c.seed = parse(key, value)?,
        "verbose" => c.verbose = parse_bool(key, value)?,
        _ if set_budget(&mut c.budget, key, value)? => {}
        _ => return unknown(key),
    }
    Ok(())
}
