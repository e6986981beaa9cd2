//! Grand-canonical log-partition function `ln Ξ = Σ_k ln(1 + z e^{-βε_k})`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectrum::{SpectralProblem, Spectrum, Truncation};

use super::canonical::{log_elementary_symmetric, log_tail_sum, smallest_satisfying};
use super::quadrature::integrate_with_breaks;
use super::{GrandResult, ThermoParams, LEVEL_CAP, TRUNCATION_TARGET};

/// `ln(1 + e^y)` without overflow for large `y` or loss for very negative `y`.
pub fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// Upper bound on `Σ_{k>M} z e^{-βε_k}`, which dominates the missing part of
/// `ln Ξ` because `ln(1 + y) ≤ y`.
pub fn tail_bound(spectrum: &Spectrum, params: &ThermoParams) -> f64 {
    match spectrum.truncation() {
        Truncation::Complete => 0.0,
        Truncation::Lowest { lambda, sup_norm } => log_tail(lambda, sup_norm, params, spectrum.len()).exp(),
    }
}

fn log_tail(lambda: f64, sup_norm: f64, params: &ThermoParams, m: usize) -> f64 {
    params.beta() * params.mu() + log_tail_sum(lambda, sup_norm, params.beta(), m)
}

pub fn grand_log_xi(spectrum: &Spectrum, params: &ThermoParams) -> Result<GrandResult> {
    let (beta, mu) = (params.beta(), params.mu());
    let log_xi: f64 = spectrum.eigenvalues().iter().map(|&e| softplus(beta * (mu - e))).sum();
    if !log_xi.is_finite() {
        return Err(Error::NonFinite("ln Xi".into()));
    }
    Ok(GrandResult {
        log_xi,
        tail_bound: tail_bound(spectrum, params),
        m_used: spectrum.len(),
    })
}

/// Number of levels of `problem` needed for a tail bound below
/// [`TRUNCATION_TARGET`] at every chemical potential up to `mu_max`.
pub fn levels_for_grand(problem: &SpectralProblem, beta: f64, mu_max: f64) -> Result<usize> {
    let params = ThermoParams::new(beta, mu_max)?;
    let c = problem.sup_norm();
    let lambda = problem.lambda;
    let ok = |m: usize| log_tail(lambda, c, &params, m) < TRUNCATION_TARGET.ln();
    smallest_satisfying(1, ok).ok_or_else(|| {
        Error::Capacity(format!(
            "grand tail bound at mu={mu_max} needs more than {LEVEL_CAP} levels"
        ))
    })
}

/// `ln Ξ_μ` of `problem` with the level count grown until the tail bound is
/// below [`TRUNCATION_TARGET`].
pub fn grand_log_xi_converged(problem: &SpectralProblem, params: &ThermoParams) -> Result<(GrandResult, Spectrum)> {
    let m = levels_for_grand(problem, params.beta(), params.mu())?;
    let spectrum = problem.spectrum(m)?;
    let result = grand_log_xi(&spectrum, params)?;
    Ok((result, spectrum))
}

/// `Ω⁰_μ = (1/π) ∫₀^∞ ln(1 + e^{β(μ - p²)}) dp`, the free-gas pressure term
/// per unit length in the thermodynamic limit.
pub fn free_grand_log_xi_limit(params: &ThermoParams) -> Result<f64> {
    let (beta, mu) = (params.beta(), params.mu());
    let p_max = (mu.max(0.0) + 50.0 / beta).sqrt();
    let mut breaks = vec![0.0];
    if mu > 0.0 {
        // the integrand bends sharply around the Fermi momentum
        let pf = mu.sqrt();
        let width = (4.0 / beta / pf.max(1e-12)).min(pf);
        for p in [pf - width, pf, pf + width] {
            if p > 0.0 && p < p_max {
                breaks.push(p);
            }
        }
    }
    breaks.push(p_max);
    breaks.dedup();
    let (value, _) = integrate_with_breaks(|p| softplus(beta * (mu - p * p)), &breaks, 1e-10 * PI)?;
    Ok(value / PI)
}

/// `|ln Ξ - ln Σ_{N=0}^{M} z^N Z_N|` over the levels of `spectrum`: the
/// product form of `Ξ` against the canonical recursion.
pub fn grand_canonical_consistency_check(spectrum: &Spectrum, params: &ThermoParams) -> Result<f64> {
    let xi = spectrum
        .eigenvalues()
        .iter()
        .map(|&e| softplus(params.beta() * (params.mu() - e)))
        .sum::<f64>();
    let m = spectrum.len();
    let logs = log_elementary_symmetric(spectrum.eigenvalues(), params.beta(), m)?;
    let bm = params.beta() * params.mu();
    let terms: Vec<f64> = logs.iter().enumerate().map(|(n, l)| n as f64 * bm + l).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok((xi - (top + sum.ln())).abs())
}
