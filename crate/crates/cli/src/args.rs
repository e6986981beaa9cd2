//! Command-line flags. Every flag overrides the matching config-file key.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{potential_from_name, with_amplitude, Experiment, ExperimentConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fermi-lab",
    version,
    about = "Convergence experiments for fermions in a bounded 1D potential"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Run the reduced-scale oracle suite; same as the `selftest` subcommand.
    #[arg(long, global = true)]
    pub selftest: bool,

    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (default: $FERMI_LAB_OUT, then ./fermi-lab-out).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: number of cores).
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "X")]
    pub beta: Option<f64>,
    /// zero, constant, cosine, square_well or tabulated.
    #[arg(long, global = true, value_name = "NAME")]
    pub potential: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "X")]
    pub amplitude: Option<f64>,
    /// Cosine period (default 1).
    #[arg(long, global = true, value_name = "X")]
    pub period: Option<f64>,
    /// Sample file for the tabulated potential.
    #[arg(long, global = true, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Box length.
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "X")]
    pub lambda: Option<f64>,
    /// Interior grid points; adaptive when omitted.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    /// Number of levels.
    #[arg(long, global = true, value_name = "M")]
    pub levels: Option<usize>,
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Comma-separated chemical potentials.
    #[arg(
        long = "mu",
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true,
        value_name = "LIST"
    )]
    pub mu_list: Option<Vec<f64>>,
    /// Comma-separated box lengths.
    #[arg(long = "lambdas", global = true, value_delimiter = ',', value_name = "LIST")]
    pub lambda_list: Option<Vec<f64>>,
    /// Comma-separated particle numbers.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    pub particles: Option<Vec<usize>>,
    /// Comma-separated counting-function arguments.
    #[arg(long = "t-grid", global = true, value_delimiter = ',', value_name = "LIST")]
    pub t_grid: Option<Vec<f64>>,
    /// Random trials for the consistency experiment.
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Lowest eigenvalues.
    Spectrum,
    /// Canonical ln Z_N.
    Canonical,
    /// Grand-canonical ln Ξ_μ.
    Grand,
    /// Counting function against the Weyl law.
    Weyl,
    /// Canonical ratio sweep at increasing density.
    Thm1,
    /// Grand-canonical ratio sweep at increasing μ in a fixed box.
    Thm2,
    /// Per-length ratio sweep against the thermodynamic limit.
    Thm3,
    /// Free-gas upper bound on Z_N.
    Est1,
    /// ln Ξ against the canonical sum on random spectra.
    Consistency,
    /// Reduced-scale oracle and invariant suite.
    Selftest,
}

impl Command {
    pub fn experiment(self) -> Option<Experiment> {
        Some(match self {
            Command::Spectrum => Experiment::Spectrum,
            Command::Canonical => Experiment::Canonical,
            Command::Grand => Experiment::Grand,
            Command::Weyl => Experiment::Weyl,
            Command::Thm1 => Experiment::Theorem1,
            Command::Thm2 => Experiment::Theorem2,
            Command::Thm3 => Experiment::Theorem3,
            Command::Est1 => Experiment::Est1,
            Command::Consistency => Experiment::Consistency,
            Command::Selftest => return None,
        })
    }
}

impl Cli {
    pub fn is_selftest(&self) -> bool {
        self.selftest || self.command == Some(Command::Selftest)
    }

    /// Loads the config file, if any, and applies the flags on top.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(exp) = self.command.and_then(Command::experiment) {
            match cfg.experiment {
                Some(file) if file != exp => {
                    return Err(CliError::Config(format!(
                        "config selects experiment '{file}' but the subcommand selects '{exp}'"
                    )))
                }
                _ => cfg.experiment = Some(exp),
            }
        }
        if let Some(name) = &self.potential {
            cfg.potential = Some(potential_from_name(
                name,
                self.amplitude,
                self.period,
                self.table.as_deref(),
            )?);
        } else if let Some(a) = self.amplitude {
            let base = cfg
                .potential
                .take()
                .ok_or_else(|| CliError::Config("--amplitude needs a potential".into()))?;
            cfg.potential = Some(with_amplitude(base, a)?);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = Some(v.clone());
                }
            )*};
        }
        set!(
            beta,
            lambda,
            grid,
            levels,
            seed,
            mu_list,
            lambda_list,
            particles,
            t_grid,
            trials
        );
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }
}
