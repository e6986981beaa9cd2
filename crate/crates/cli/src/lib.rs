//! Command-line front end for the fermi-lab experiments: config handling,
//! atomic CSV/JSON artifacts and the self-test suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod random;
pub mod run;
pub mod selftest;

pub use args::Cli;
pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;

/// Runs the parsed command line and returns the summary line.
pub fn main_with(cli: &Cli) -> Result<String, CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let cfg = cli.resolve()?;
    if cli.is_selftest() {
        return selftest::run(cfg.seed(), &cfg.output_dir());
    }
    run::run(&cfg)
}
