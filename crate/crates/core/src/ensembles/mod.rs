//! Canonical and grand-canonical log-partition functions of independent
//! spinless fermions, each reported with a rigorous bound on the error from
//! levels that were not computed.

pub mod canonical;
pub mod grand;
pub mod quadrature;

use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::export::fmt_f64;

pub use canonical::{canonical_log_z, canonical_log_z_bruteforce, canonical_log_z_converged, log_elementary_symmetric};
pub use grand::{
    free_grand_log_xi_limit, grand_canonical_consistency_check, grand_log_xi, grand_log_xi_converged, levels_for_grand,
};

/// Level counts grow until truncation and tail bounds fall below this.
pub const TRUNCATION_TARGET: f64 = 1e-10;

/// Hard cap on the number of computed levels.
pub const LEVEL_CAP: usize = 200_000;

/// Inverse temperature and chemical potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoParams {
    beta: f64,
    mu: f64,
}

impl ThermoParams {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        if mu.is_nan() {
            return domain("chemical potential is NaN");
        }
        Ok(ThermoParams { beta, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Fugacity `z = e^{βμ}`.
    pub fn fugacity(&self) -> f64 {
        (self.beta * self.mu).exp()
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.beta, mu)
    }
}

/// `ln Z_N` and a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalResult {
    pub log_z: f64,
    /// `0 ≤ ln Z_N(exact) - log_z ≤ truncation_bound`.
    pub truncation_bound: f64,
    pub m_used: usize,
}

/// `ln Ξ_μ` and a bound on the contribution of the missing levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrandResult {
    pub log_xi: f64,
    /// `0 ≤ ln Ξ(exact) - log_xi ≤ tail_bound`.
    pub tail_bound: f64,
    pub m_used: usize,
}

impl GrandResult {
    /// `Ω = ln Ξ / Λ`.
    pub fn per_length(&self, lambda: f64) -> f64 {
        self.log_xi / lambda
    }
}

/// Writes `N,beta,log_z,trunc_bound` rows.
pub fn write_canonical_csv<W: Write>(mut out: W, rows: &[(usize, f64, CanonicalResult)]) -> std::io::Result<()> {
    out.write_all(b"N,beta,log_z,trunc_bound\n")?;
    for (n, beta, r) in rows {
        writeln!(
            out,
            "{},{},{},{}",
            n,
            fmt_f64(*beta),
            fmt_f64(r.log_z),
            fmt_f64(r.truncation_bound)
        )?;
    }
    Ok(())
}

/// Writes `mu,beta,log_xi,tail_bound` rows.
pub fn write_grand_csv<W: Write>(mut out: W, rows: &[(ThermoParams, GrandResult)]) -> std::io::Result<()> {
    out.write_all(b"mu,beta,log_xi,tail_bound\n")?;
    for (p, r) in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.mu),
            fmt_f64(p.beta),
            fmt_f64(r.log_xi),
            fmt_f64(r.tail_bound)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ThermoParams::new(0.0, 1.0).is_err());
        assert!(ThermoParams::new(-1.0, 1.0).is_err());
        assert!(ThermoParams::new(f64::INFINITY, 1.0).is_err());
        assert!(ThermoParams::new(1.0, f64::NAN).is_err());
        let p = ThermoParams::new(2.0, 0.5).unwrap();
        assert!((p.fugacity() - 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        let r = CanonicalResult {
            log_z: -1.5,
            truncation_bound: 0.0,
            m_used: 3,
        };
        write_canonical_csv(&mut buf, &[(2, 1.0, r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "N,beta,log_z,trunc_bound\n2,1.0000000000000000e0,-1.5000000000000000e0,0.0000000000000000e0\n"
        );
        let mut buf = Vec::new();
        let g = GrandResult {
            log_xi: 0.5,
            tail_bound: 1e-12,
            m_used: 3,
        };
        write_grand_csv(&mut buf, &[(ThermoParams::new(1.0, 2.0).unwrap(), g)]).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("mu,beta,log_xi,tail_bound\n2.0"));
    }
}
