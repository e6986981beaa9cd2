//! Canonical partition function of independent fermions.
//!
//! `Z_N = Σ_{k_1 < … < k_N} exp(-β Σ ε_{k_i})` is the `N`-th elementary
//! symmetric polynomial of the Boltzmann factors `x_k = exp(-β ε_k)`.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::spectrum::{SpectralProblem, Spectrum, Truncation};

use super::{CanonicalResult, ThermoParams, LEVEL_CAP, TRUNCATION_TARGET};

/// `ln e_j(x_1, …, x_M)` for `j = 0..=n_max`, `x_k = exp(-β ε_k)`.
///
/// Runs `e_j ← e_j + x_m e_{j-1}` over the levels. Every term is
/// nonnegative, so nothing cancels. Column `j` is stored as `a_j · exp(s_j)`
/// with `s_j` starting at `-β(ε_1 + … + ε_j)`; the multiplier applied to
/// `a_{j-1}` is then `exp(β(ε_j - ε_m)) ≤ 1` and columns are rescaled if the
/// mantissa grows large.
pub fn log_elementary_symmetric(levels: &[f64], beta: f64, n_max: usize) -> Result<Vec<f64>> {
    if n_max > levels.len() {
        return domain(format!("cannot place {n_max} fermions in {} levels", levels.len()));
    }
    let mut scale = vec![0.0; n_max + 1];
    for j in 1..=n_max {
        scale[j] = scale[j - 1] - beta * levels[j - 1];
    }
    let mut mant = vec![0.0; n_max + 1];
    mant[0] = 1.0;

    for (m, &eps) in levels.iter().enumerate() {
        let top = (m + 1).min(n_max);
        for j in (1..=top).rev() {
            let factor = (scale[j - 1] - scale[j] - beta * eps).exp();
            mant[j] += mant[j - 1] * factor;
            if mant[j] > 1e200 {
                scale[j] += mant[j].ln();
                mant[j] = 1.0;
            }
        }
    }
    Ok(mant.iter().zip(&scale).map(|(a, s)| a.ln() + s).collect())
}

/// Upper bound on `ln Z_N(all levels) - ln Z_N(lowest M levels)`.
///
/// With levels sorted, `e_{N-j}/e_N ≤ (N/x_N)^j` and the tail satisfies
/// `e_j(tail) ≤ T^j/j!`, `T = Σ_{k>M} x_k`, so the error is at most
/// `N T / x_N`. `T` is bounded with `ε_k ≥ π²k²/Λ² - C` and a Gaussian tail
/// integral.
pub fn truncation_bound(spectrum: &Spectrum, n: usize, beta: f64) -> f64 {
    match spectrum.truncation() {
        Truncation::Complete => 0.0,
        Truncation::Lowest { lambda, sup_norm } => {
            if n == 0 {
                return 0.0;
            }
            let eps_n = spectrum.eigenvalues()[n - 1];
            let log_tail = log_tail_sum(lambda, sup_norm, beta, spectrum.len());
            ((n as f64).ln() + beta * eps_n + log_tail).exp()
        }
    }
}

/// `ln` of an upper bound on `Σ_{k>M} exp(-β(π²k²/Λ² - C))`.
pub(crate) fn log_tail_sum(lambda: f64, sup_norm: f64, beta: f64, m: usize) -> f64 {
    let a = beta * PI * PI / (lambda * lambda);
    let gauss = if m == 0 {
        0.5 * (PI / a).ln() - 2f64.ln()
    } else {
        let m = m as f64;
        -a * m * m - (2.0 * a * m).ln()
    };
    beta * sup_norm + gauss
}

/// `ln Z_N` from the levels in `spectrum`, with the bound on the error from
/// levels that were not computed.
pub fn canonical_log_z(spectrum: &Spectrum, n: usize, params: &ThermoParams) -> Result<CanonicalResult> {
    if n > spectrum.len() {
        return Err(Error::Capacity(format!(
            "{n} particles need at least {n} levels, spectrum has {}",
            spectrum.len()
        )));
    }
    let logs = log_elementary_symmetric(spectrum.eigenvalues(), params.beta(), n)?;
    let log_z = logs[n];
    if !log_z.is_finite() {
        return Err(Error::NonFinite(format!("ln Z_{n}")));
    }
    Ok(CanonicalResult {
        log_z,
        truncation_bound: truncation_bound(spectrum, n, params.beta()),
        m_used: spectrum.len(),
    })
}

/// Grows the level count of `problem` until the truncation bound is below
/// [`TRUNCATION_TARGET`]. Returns the result and the spectrum it used.
pub fn canonical_log_z_converged(
    problem: &SpectralProblem,
    n: usize,
    params: &ThermoParams,
) -> Result<(CanonicalResult, Spectrum)> {
    let mut m = initial_canonical_levels(problem, n, params.beta())?;
    loop {
        let spectrum = problem.spectrum(m)?;
        let result = canonical_log_z(&spectrum, n, params)?;
        if result.truncation_bound < TRUNCATION_TARGET {
            return Ok((result, spectrum));
        }
        m = (m as f64 * 1.5).ceil() as usize;
        if m > LEVEL_CAP {
            return Err(Error::Capacity(format!(
                "canonical truncation bound {:e} for N={n} not below {TRUNCATION_TARGET:e} within {LEVEL_CAP} levels",
                result.truncation_bound
            )));
        }
    }
}

/// Smallest `M` whose truncation bound, with `ε_N` replaced by its upper
/// estimate `π²N²/Λ² + C`, is below the target.
fn initial_canonical_levels(problem: &SpectralProblem, n: usize, beta: f64) -> Result<usize> {
    let lambda = problem.lambda;
    let c = problem.sup_norm();
    let nn = n.max(1) as f64;
    let eps_n = PI * PI * nn * nn / (lambda * lambda) + c;
    let bound = |m: usize| (nn.ln() + beta * eps_n + log_tail_sum(lambda, c, beta, m)).exp();
    smallest_satisfying(n.max(1), |m| bound(m) < TRUNCATION_TARGET)
        .ok_or_else(|| Error::Capacity(format!("N={n} needs more than {LEVEL_CAP} levels")))
}

/// Smallest `m ≥ start` (up to [`LEVEL_CAP`]) with `ok(m)`, for monotone `ok`.
pub(crate) fn smallest_satisfying(start: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    let mut lo = start;
    if ok(lo) {
        return Some(lo);
    }
    let mut hi = lo;
    loop {
        hi = ((hi as f64 * 1.5).ceil() as usize).max(hi + 1);
        if hi > LEVEL_CAP {
            if ok(LEVEL_CAP) {
                hi = LEVEL_CAP;
                break;
            }
            return None;
        }
        if ok(hi) {
            break;
        }
        lo = hi;
    }
    // ok(hi) holds, ok(lo) does not
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Largest list accepted by [`canonical_log_z_bruteforce`].
pub const BRUTEFORCE_MAX_LEVELS: usize = 22;

/// `ln Z_N` straight from the defining sum over `N`-subsets, with
/// compensated summation. Reference implementation for small level sets.
pub fn canonical_log_z_bruteforce(levels: &[f64], n: usize, beta: f64) -> Result<f64> {
    if levels.len() > BRUTEFORCE_MAX_LEVELS {
        return domain(format!(
            "brute force limited to {BRUTEFORCE_MAX_LEVELS} levels, got {}",
            levels.len()
        ));
    }
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if n > levels.len() {
        return domain(format!("{n} particles in {} levels", levels.len()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let e_min: f64 = sorted[..n].iter().sum();

    // Neumaier summation of exp(-β(E_S - E_min)) over all n-subsets
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut idx: Vec<usize> = (0..n).collect();
    let len = sorted.len();
    loop {
        let e: f64 = idx.iter().map(|&i| sorted[i]).sum();
        let term = (-beta * (e - e_min)).exp();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;

        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(-beta * e_min + (sum + comp).ln());
            }
            i -= 1;
            if idx[i] < len - n + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
