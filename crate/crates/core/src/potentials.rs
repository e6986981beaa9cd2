//! Bounded external potentials on the box `[0, Λ]`.
//!
//! Energies are in units where `ℏ = 2m = 1`, so the one-particle
//! Hamiltonian is `-d²/dx² + V(x)` with no extra constants.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};

/// A bounded potential `V(x)` on `[0, Λ]`.
///
/// `Cosine` uses an absolute period, tiling a fixed lattice across the box.
/// `SquareWell` and `Tabulated` are given in the relative coordinate `x/Λ`
/// so a single spec serves every box length in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        amplitude: f64,
    },
    Cosine {
        amplitude: f64,
        period: f64,
    },
    SquareWell {
        amplitude: f64,
        /// Support `[a, b]` of the well in relative coordinates, `0 ≤ a < b ≤ 1`.
        bounds: (f64, f64),
    },
    Tabulated {
        /// `(relative position, value)` pairs, positions strictly increasing
        /// from 0 to 1. Interpolated piecewise-linearly.
        samples: Vec<(f64, f64)>,
    },
}

impl PotentialSpec {
    pub fn cosine(amplitude: f64, period: f64) -> Self {
        PotentialSpec::Cosine { amplitude, period }
    }

    pub fn square_well(amplitude: f64, a: f64, b: f64) -> Self {
        PotentialSpec::SquareWell {
            amplitude,
            bounds: (a, b),
        }
    }

    /// Builds a tabulated potential, checking the sample invariants.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        let spec = PotentialSpec::Tabulated { samples };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Constant { .. } => "constant",
            PotentialSpec::Cosine { .. } => "cosine",
            PotentialSpec::SquareWell { .. } => "square_well",
            PotentialSpec::Tabulated { .. } => "tabulated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite(format!("{} potential {what}", self.name())))
            }
        };
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant { amplitude } => finite(*amplitude, "amplitude"),
            PotentialSpec::Cosine { amplitude, period } => {
                finite(*amplitude, "amplitude")?;
                finite(*period, "period")?;
                if *period <= 0.0 {
                    return domain(format!("cosine period must be positive, got {period}"));
                }
                Ok(())
            }
            PotentialSpec::SquareWell {
                amplitude,
                bounds: (a, b),
            } => {
                finite(*amplitude, "amplitude")?;
                finite(*a, "well bound")?;
                finite(*b, "well bound")?;
                if !(0.0 <= *a && a < b && *b <= 1.0) {
                    return domain(format!(
                        "square well bounds must satisfy 0 <= a < b <= 1, got ({a}, {b})"
                    ));
                }
                Ok(())
            }
            PotentialSpec::Tabulated { samples } => validate_samples(samples),
        }
    }

    /// Value of the potential at absolute position `x` in a box of length `lambda`.
    pub fn evaluate(&self, x: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("box length must be positive and finite, got {lambda}"));
        }
        if !(0.0..=lambda).contains(&x) {
            return domain(format!("position {x} outside [0, {lambda}]"));
        }
        Ok(self.value_unchecked(x, lambda))
    }

    /// `evaluate` without the range check; callers guarantee `0 ≤ x ≤ Λ`.
    pub(crate) fn value_unchecked(&self, x: f64, lambda: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { amplitude } => *amplitude,
            PotentialSpec::Cosine { amplitude, period } => amplitude * (2.0 * PI * x / period).cos(),
            PotentialSpec::SquareWell {
                amplitude,
                bounds: (a, b),
            } => {
                let r = x / lambda;
                if (*a..=*b).contains(&r) {
                    *amplitude
                } else {
                    0.0
                }
            }
            PotentialSpec::Tabulated { samples } => interpolate(samples, x / lambda),
        }
    }

    /// `C = sup_{[0,Λ]} |V|`. Exact for every family: the cosine attains its
    /// amplitude at `x = 0`, and a piecewise-linear function attains its
    /// extremes at the nodes.
    pub fn sup_norm(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { amplitude }
            | PotentialSpec::Cosine { amplitude, .. }
            | PotentialSpec::SquareWell { amplitude, .. } => amplitude.abs(),
            PotentialSpec::Tabulated { samples } => samples.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max),
        }
    }

    /// Content hash of the spec (first 16 hex digits of SHA-256 over its JSON form).
    pub fn id(&self) -> String {
        let json = serde_json::to_vec(self).expect("potential spec serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }

    /// Reads a tabulated potential from a text file.
    ///
    /// One `position value` pair per line, whitespace separated; `#` starts a
    /// comment. Positions are relative (`x/Λ`), strictly increasing, and must
    /// start at 0 and end at 1.
    pub fn load_tabulated(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_tabulated(&text)
    }

    pub fn parse_tabulated(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "expected `position value`, found {} fields",
                    fields.len()
                )));
            }
            let mut nums = [0.0; 2];
            for (slot, field) in nums.iter_mut().zip(&fields) {
                *slot = field.parse::<f64>().map_err(|e| parse_err(format!("`{field}`: {e}")))?;
                if !slot.is_finite() {
                    return Err(parse_err(format!("non-finite value `{field}`")));
                }
            }
            samples.push((nums[0], nums[1]));
        }
        Self::tabulated(samples)
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "zero"),
            PotentialSpec::Constant { amplitude } => write!(f, "constant({amplitude})"),
            PotentialSpec::Cosine { amplitude, period } => {
                write!(f, "cosine(amplitude={amplitude}, period={period})")
            }
            PotentialSpec::SquareWell {
                amplitude,
                bounds: (a, b),
            } => write!(f, "square_well(amplitude={amplitude}, [{a}, {b}])"),
            PotentialSpec::Tabulated { samples } => write!(f, "tabulated({} samples)", samples.len()),
        }
    }
}

fn validate_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < 2 {
        return domain("tabulated potential needs at least two samples");
    }
    for &(x, v) in samples {
        if !x.is_finite() || !v.is_finite() {
            return Err(Error::NonFinite(format!("tabulated sample ({x}, {v})")));
        }
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return domain(format!(
                "tabulated positions must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            ));
        }
    }
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if first != 0.0 || last != 1.0 {
        return domain(format!("tabulated positions must cover [0, 1], got [{first}, {last}]"));
    }
    Ok(())
}

fn interpolate(samples: &[(f64, f64)], r: f64) -> f64 {
    // first index whose position exceeds r
    let i = samples.partition_point(|&(x, _)| x <= r);
    if i == 0 {
        return samples[0].1;
    }
    if i == samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (x0, v0) = samples[i - 1];
    let (x1, v1) = samples[i];
    let t = (r - x0) / (x1 - x0);
    v0 + t * (v1 - v0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(PotentialSpec::Zero.evaluate(1.0, 10.0).unwrap(), 0.0);
        let c = PotentialSpec::Constant { amplitude: 2.5 };
        assert_eq!(c.evaluate(3.3, 10.0).unwrap(), 2.5);
        let cos = PotentialSpec::cosine(1.0, 1.0);
        assert!(cos.evaluate(0.25, 10.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_outside_box() {
        let cos = PotentialSpec::cosine(1.0, 1.0);
        assert!(matches!(cos.evaluate(-0.1, 10.0), Err(Error::Domain(_))));
        assert!(matches!(cos.evaluate(10.5, 10.0), Err(Error::Domain(_))));
        assert!(cos.evaluate(10.0, 10.0).is_ok());
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(PotentialSpec::Zero.sup_norm(), 0.0);
        assert_eq!(PotentialSpec::cosine(1.5, 2.0).sup_norm(), 1.5);
        let tab = PotentialSpec::tabulated(vec![(0.0, -2.0), (0.5, 3.0), (1.0, 0.0)]).unwrap();
        assert_eq!(tab.sup_norm(), 3.0);
        assert_eq!(PotentialSpec::square_well(-0.7, 0.2, 0.4).sup_norm(), 0.7);
    }

    #[test]
    fn square_well_support_scales_with_box() {
        let w = PotentialSpec::square_well(2.0, 0.25, 0.5);
        assert_eq!(w.evaluate(3.0, 10.0).unwrap(), 2.0);
        assert_eq!(w.evaluate(6.0, 10.0).unwrap(), 0.0);
        assert_eq!(w.evaluate(0.3, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let tab = PotentialSpec::tabulated(vec![(0.0, -2.0), (0.5, 3.0), (1.0, 0.0)]).unwrap();
        assert!((tab.evaluate(2.5, 10.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(tab.evaluate(5.0, 10.0).unwrap(), 3.0);
        assert_eq!(tab.evaluate(10.0, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn parse_two_line_file_is_constant() {
        let spec = PotentialSpec::parse_tabulated("0.0 1.0\n1.0 1.0\n").unwrap();
        for x in [0.0, 0.3, 0.99, 1.0] {
            assert_eq!(spec.evaluate(x, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn parse_accepts_comments_and_blank_lines() {
        let text = "# header\n\n0.0 1.0  # start\n0.5 2.0\n1.0 0.0\n";
        let spec = PotentialSpec::parse_tabulated(text).unwrap();
        assert_eq!(spec.sup_norm(), 2.0);
    }

    #[test]
    fn parse_rejects_duplicate_position() {
        let err = PotentialSpec::parse_tabulated("0.0 1.0\n0.5 1.0\n0.5 2.0\n1.0 0.0\n");
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn parse_rejects_nan() {
        let err = PotentialSpec::parse_tabulated("0.0 1.0\n0.5 NaN\n1.0 0.0\n");
        assert!(matches!(err, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn parse_rejects_garbage_and_gaps() {
        assert!(matches!(
            PotentialSpec::parse_tabulated("0.0 1.0 3.0\n1.0 0.0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PotentialSpec::parse_tabulated("0.1 1.0\n1.0 0.0\n"),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "0 0\n0.5 -1.5\n1 0\n").unwrap();
        let spec = PotentialSpec::load_tabulated(&path).unwrap();
        assert_eq!(spec.sup_norm(), 1.5);
    }

    #[test]
    fn id_is_stable_and_distinguishes_specs() {
        let a = PotentialSpec::cosine(1.0, 1.0);
        assert_eq!(a.id(), a.clone().id());
        assert_eq!(a.id().len(), 16);
        assert_ne!(a.id(), PotentialSpec::cosine(1.0, 2.0).id());
    }

    #[test]
    fn serde_round_trip() {
        let spec = PotentialSpec::square_well(1.0, 0.1, 0.6);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&json).unwrap(), spec);
    }
}
