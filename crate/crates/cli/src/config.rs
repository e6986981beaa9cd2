//! Experiment configuration: a TOML file merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use fermi_lab::spectrum::DEFAULT_GRID_REL_ERROR;
use fermi_lab::{GridPolicy, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_ENV: &str = "FERMI_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "fermi-lab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Spectrum,
    Canonical,
    Grand,
    Weyl,
    Theorem1,
    Theorem2,
    Theorem3,
    Est1,
    Consistency,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Canonical => "canonical",
            Experiment::Grand => "grand",
            Experiment::Weyl => "weyl",
            Experiment::Theorem1 => "theorem1",
            Experiment::Theorem2 => "theorem2",
            Experiment::Theorem3 => "theorem3",
            Experiment::Est1 => "est1",
            Experiment::Consistency => "consistency",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every key of the config file. Keys not listed here are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub potential: Option<PotentialSpec>,
    pub beta: Option<f64>,
    /// Box length.
    pub lambda: Option<f64>,
    pub lambda_list: Option<Vec<f64>>,
    pub mu_list: Option<Vec<f64>>,
    /// Particle numbers.
    pub particles: Option<Vec<usize>>,
    /// `(N, Λ)` pairs for the canonical density sweep.
    pub schedule: Option<Vec<(usize, f64)>>,
    /// Number of levels `M`.
    pub levels: Option<usize>,
    /// Fixed number of interior grid points `n`; adaptive when absent.
    pub grid: Option<usize>,
    pub grid_rel_error: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub stability_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

fn parse_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| parse_error(e.to_string().trim().replace('\n', " ")))?;
        // serde does not reject extra keys next to a unit variant's tag
        if let Some(spec) = &cfg.potential {
            let raw: toml::Table = toml::from_str(text).map_err(|e| parse_error(e.to_string()))?;
            let known = toml::Table::try_from(spec).map_err(|e| parse_error(e.to_string()))?;
            if let Some(toml::Value::Table(given)) = raw.get("potential") {
                if let Some(key) = given.keys().find(|k| !known.contains_key(*k)) {
                    return Err(parse_error(format!("unknown potential key '{key}'")));
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| parse_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn potential(&self) -> PotentialSpec {
        self.potential.clone().unwrap_or(PotentialSpec::Zero)
    }

    pub fn grid_policy(&self) -> GridPolicy {
        match self.grid {
            Some(n) => GridPolicy::Fixed(n),
            None => GridPolicy::Adaptive {
                rel_error: self.grid_rel_error.unwrap_or(DEFAULT_GRID_REL_ERROR),
            },
        }
    }

    /// Output directory: explicit setting, then `FERMI_LAB_OUT`, then
    /// `./fermi-lab-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    /// Checks the invariants that do not depend on the experiment's solver.
    pub fn validate(&self) -> Result<Experiment, CliError> {
        let experiment = self.experiment.ok_or_else(|| parse_error("no experiment selected"))?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(parse_error(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("beta", self.beta())?;
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        for &l in self.lambda_list.iter().flatten() {
            positive("lambda_list entry", l)?;
        }
        for &mu in self.mu_list.iter().flatten() {
            if !mu.is_finite() {
                return Err(parse_error(format!("mu_list entry must be finite, got {mu}")));
            }
        }
        for &t in self.t_grid.iter().flatten() {
            positive("t_grid entry", t)?;
        }
        for &(n, l) in self.schedule.iter().flatten() {
            positive("schedule lambda", l)?;
            if n == 0 {
                return Err(parse_error("schedule particle number must be positive"));
            }
        }
        if self.particles.iter().flatten().any(|&n| n == 0) {
            return Err(parse_error("particle numbers must be positive"));
        }
        if self.levels == Some(0) {
            return Err(parse_error("levels must be positive"));
        }
        if self.grid == Some(0) {
            return Err(parse_error("grid must be positive"));
        }
        if self.trials == Some(0) {
            return Err(parse_error("trials must be positive"));
        }
        if let Some(r) = self.grid_rel_error {
            positive("grid_rel_error", r)?;
        }
        if let Some(s) = self.stability_threshold {
            positive("stability_threshold", s)?;
        }
        if let Some(p) = &self.potential {
            p.validate().map_err(|e| parse_error(e.to_string()))?;
        }
        Ok(experiment)
    }
}

/// Builds a potential from its name, as given on the command line.
pub fn potential_from_name(
    name: &str,
    amplitude: Option<f64>,
    period: Option<f64>,
    table: Option<&Path>,
) -> Result<PotentialSpec, CliError> {
    let amplitude = amplitude.unwrap_or(1.0);
    let spec = match name {
        "zero" => PotentialSpec::Zero,
        "constant" => PotentialSpec::Constant { amplitude },
        "cosine" => PotentialSpec::cosine(amplitude, period.unwrap_or(1.0)),
        "square_well" => PotentialSpec::square_well(amplitude, 0.25, 0.75),
        "tabulated" => {
            let path = table.ok_or_else(|| parse_error("tabulated potential needs --table PATH"))?;
            PotentialSpec::load_tabulated(path).map_err(|e| parse_error(e.to_string()))?
        }
        other => return Err(parse_error(format!("unknown potential '{other}'"))),
    };
    spec.validate().map_err(|e| parse_error(e.to_string()))?;
    Ok(spec)
}

/// Replaces the amplitude of a parametric potential.
pub fn with_amplitude(spec: PotentialSpec, amplitude: f64) -> Result<PotentialSpec, CliError> {
    Ok(match spec {
        PotentialSpec::Constant { .. } => PotentialSpec::Constant { amplitude },
        PotentialSpec::Cosine { period, .. } => PotentialSpec::Cosine { amplitude, period },
        PotentialSpec::SquareWell { bounds, .. } => PotentialSpec::SquareWell { amplitude, bounds },
        other => return Err(parse_error(format!("potential '{}' has no amplitude", other.name()))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = ExperimentConfig::from_toml(
            r#"
experiment = "theorem2"
beta = 2.0
lambda = 5.0
mu_list = [25.0, 50.0]

[potential]
kind = "cosine"
amplitude = 1.0
period = 1.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.validate().unwrap(), Experiment::Theorem2);
        assert_eq!(cfg.potential(), PotentialSpec::cosine(1.0, 1.0));
        assert_eq!(cfg.beta(), 2.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_toml("experiment = \"grand\"\nalpha = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[potential]\nkind = \"zero\"\nextra = 1\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "experiment = \"grand\"\nbeta = -1.0\n",
            "experiment = \"grand\"\nlambda = 0.0\n",
            "experiment = \"weyl\"\nt_grid = [1.0, -2.0]\n",
            "beta = 1.0\n",
        ] {
            let cfg = ExperimentConfig::from_toml(text).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            experiment: Some(Experiment::Theorem1),
            potential: Some(PotentialSpec::square_well(1.0, 0.2, 0.4)),
            schedule: Some(vec![(16, 4.0)]),
            seed: Some(3),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn potentials_by_name() {
        assert_eq!(
            potential_from_name("cosine", Some(2.0), None, None).unwrap(),
            PotentialSpec::cosine(2.0, 1.0)
        );
        assert!(potential_from_name("nope", None, None, None).is_err());
        assert!(potential_from_name("tabulated", None, None, None).is_err());
        assert!(with_amplitude(PotentialSpec::Zero, 1.0).is_err());
        assert_eq!(
            with_amplitude(PotentialSpec::cosine(1.0, 2.0), 3.0).unwrap(),
            PotentialSpec::cosine(3.0, 2.0)
        );
    }
}
