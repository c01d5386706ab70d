pub mod baselines;
pub mod error;
pub mod experiment;
pub mod families;
pub mod objective;
pub mod oracle;
pub mod problems;
pub mod record;
pub mod rng;
pub mod sequences;
pub mod smc;
