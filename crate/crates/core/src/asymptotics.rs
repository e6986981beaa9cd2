//! Convergence sweeps comparing the system in a bounded potential with the
//! free Fermi gas: high density at fixed temperature (canonical), large
//! chemical potential in a fixed box and per unit length (grand canonical),
//! plus the eigenvalue counting law and the free-gas upper bound on `Z_N`.
//!
//! Every sweep reports the observed ratio next to an a priori bound on
//! `|ratio - 1|` built from `|ε_k⁽ⱽ⁾ - ε_k⁽⁰⁾| ≤ C`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{
    canonical_log_z, canonical_log_z_converged, free_grand_log_xi_limit, grand_log_xi, levels_for_grand, GrandResult,
    ThermoParams, LEVEL_CAP, TRUNCATION_TARGET,
};
use crate::error::{domain, Error, Result};
use crate::export::fmt_f64;
use crate::potentials::PotentialSpec;
use crate::spectrum::{
    compute_spectrum_on, counting_function, free_spectrum_on, perturbation_gap_of, GridPolicy, SpectralProblem,
    Spectrum, Truncation,
};

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub control: f64,
    pub ratio: f64,
    pub bound: f64,
    pub flag: bool,
    pub aux: Vec<f64>,
}

/// Rows in schedule order with named diagnostic columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    experiment: String,
    aux_names: Vec<String>,
    rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn new(experiment: &str, aux_names: &[&str], rows: Vec<SweepRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.aux.len() != aux_names.len() {
                return domain(format!(
                    "row {i} has {} aux values, expected {}",
                    row.aux.len(),
                    aux_names.len()
                ));
            }
            let finite = [row.control, row.ratio, row.bound]
                .iter()
                .chain(&row.aux)
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite(format!("{experiment} row {i}: {row:?}")));
            }
        }
        if let Some(i) = rows.windows(2).position(|w| !(w[1].control > w[0].control)) {
            return domain(format!("{experiment}: control not increasing at row {}", i + 1));
        }
        Ok(SweepTable {
            experiment: experiment.to_string(),
            aux_names: aux_names.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }

    pub fn experiment(&self) -> &str {
        &self.experiment
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn aux_names(&self) -> &[String] {
        &self.aux_names
    }

    /// Values of the aux column `name`, one per row.
    pub fn aux_column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.aux_names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.aux[j]).collect())
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flag)
    }

    /// CSV with header `control,ratio,bound,flag,aux_*`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"control,ratio,bound,flag")?;
        for name in &self.aux_names {
            write!(out, ",aux_{name}")?;
        }
        out.write_all(b"\n")?;
        for row in &self.rows {
            write!(
                out,
                "{},{},{},{}",
                fmt_f64(row.control),
                fmt_f64(row.ratio),
                fmt_f64(row.bound),
                row.flag as u8
            )?;
            for v in &row.aux {
                write!(out, ",{}", fmt_f64(*v))?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Knobs shared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub grid: GridPolicy,
    /// Relative change of `ln Ξ / Λ` between the two largest boxes above
    /// which a row is flagged.
    pub stability_threshold: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid: GridPolicy::default(),
            stability_threshold: 1e-3,
        }
    }
}

/// `(N, Λ) = (m², m)` for `m = 4..=12`.
pub fn default_theorem1_schedule() -> Vec<(usize, f64)> {
    (4..=12).map(|m| (m * m, m as f64)).collect()
}

pub fn default_theorem2_mu() -> Vec<f64> {
    vec![25.0, 50.0, 100.0, 200.0, 400.0]
}

pub fn default_theorem3_mu() -> Vec<f64> {
    vec![50.0, 100.0, 200.0]
}

pub fn default_theorem3_lambdas() -> Vec<f64> {
    vec![200.0, 400.0, 800.0]
}

pub const THEOREM1_AUX: [&str; 6] = ["log_z0_per_n", "log_z_v", "log_z_0", "gap", "m_used", "grid_n"];

/// Canonical ratios `ln Z_N⁽ⱽ⁾ / ln Z_N⁽⁰⁾` along a density schedule.
///
/// Both spectra share one grid and level count; with `C` the measured
/// perturbation gap, `e^{-βCN} Z⁽⁰⁾ ≤ Z⁽ⱽ⁾ ≤ e^{βCN} Z⁽⁰⁾`, giving the bound
/// column `βCN / |ln Z⁽⁰⁾|`.
pub fn theorem1_sweep(
    spec: &PotentialSpec,
    beta: f64,
    schedule: &[(usize, f64)],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    let params = ThermoParams::new(beta, 0.0)?;
    for &(n, lambda) in schedule {
        if !(n as f64 > lambda) {
            return domain(format!("schedule entry (N={n}, Λ={lambda}) violates N > Λ"));
        }
    }
    if schedule
        .windows(2)
        .any(|w| !(w[1].0 as f64 / w[1].1 > w[0].0 as f64 / w[0].1))
    {
        return domain("schedule density N/Λ must be strictly increasing");
    }
    let rows = schedule
        .par_iter()
        .map(|&(n, lambda)| theorem1_row(spec, &params, n, lambda, opts))
        .collect::<Result<Vec<_>>>()?;
    SweepTable::new("theorem1", &THEOREM1_AUX, rows)
}

fn theorem1_row(
    spec: &PotentialSpec,
    params: &ThermoParams,
    n: usize,
    lambda: f64,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let problem = SpectralProblem::new(spec.clone(), lambda)?.with_grid(opts.grid);
    let (mut r_v, mut s_v) = canonical_log_z_converged(&problem, n, params)?;
    let (r_0, s_0) = loop {
        let grid = *s_v.grid().expect("solver spectra carry a grid");
        let s_0 = compute_spectrum_on(&PotentialSpec::Zero, &grid, s_v.len(), problem.tol)?;
        let r_0 = canonical_log_z(&s_0, n, params)?;
        if r_0.truncation_bound < TRUNCATION_TARGET {
            break (r_0, s_0);
        }
        let m = (s_v.len() as f64 * 1.5).ceil() as usize;
        if m > LEVEL_CAP {
            return Err(Error::Capacity(format!(
                "free reference for N={n} exceeds {LEVEL_CAP} levels"
            )));
        }
        s_v = problem.spectrum(m)?;
        r_v = canonical_log_z(&s_v, n, params)?;
    };
    let gap = perturbation_gap_of(&s_v)?;
    let nf = n as f64;
    Ok(SweepRow {
        control: nf / lambda,
        ratio: r_v.log_z / r_0.log_z,
        bound: params.beta() * gap * nf / r_0.log_z.abs(),
        flag: false,
        aux: vec![
            r_0.log_z / nf,
            r_v.log_z,
            r_0.log_z,
            gap,
            s_0.len() as f64,
            s_0.grid().map_or(0.0, |g| g.n() as f64),
        ],
    })
}

/// `((μ + c)^{3/2} - (μ - c)^{3/2}) / (μ - c)^{3/2}`.
pub fn power_law_bound(mu: f64, c: f64) -> f64 {
    let lo = (mu - c).powf(1.5);
    ((mu + c).powf(1.5) - lo) / lo
}

pub const THEOREM2_AUX: [&str; 8] = [
    "log_xi_per_mu32",
    "weyl_constant",
    "log_xi_v",
    "log_xi_0",
    "sandwich_lo",
    "sandwich_hi",
    "gap",
    "m_used",
];

/// Grand-canonical ratios `ln Ξ_μ⁽ⱽ⁾ / ln Ξ_μ⁽⁰⁾` in a fixed box.
///
/// `aux_log_xi_per_mu32` approaches `aux_weyl_constant = β(2/3)(Λ/π)`.
/// `aux_sandwich_lo/hi` are `ln Ξ⁽⁰⁾` at `μ ∓ C'`, `C' = gap + 2 tol_eig`,
/// which enclose `ln Ξ⁽ⱽ⁾_μ`.
pub fn theorem2_sweep(
    spec: &PotentialSpec,
    lambda: f64,
    beta: f64,
    mu_list: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    check_mu_list(spec, mu_list)?;
    let problem = SpectralProblem::new(spec.clone(), lambda)?.with_grid(opts.grid);
    let c = spec.sup_norm();
    let mu_max = mu_list[mu_list.len() - 1];
    let m = levels_for_grand(&problem, beta, mu_max + c)?;
    let s_v = problem.spectrum(m)?;
    let grid = *s_v.grid().expect("solver spectra carry a grid");
    let s_0 = compute_spectrum_on(&PotentialSpec::Zero, &grid, m, problem.tol)?;
    let c_prime = perturbation_gap_of(&s_v)? + 2.0 * s_v.tol_eig();
    let weyl = beta * (2.0 / 3.0) * lambda / PI;

    let rows = mu_list
        .par_iter()
        .map(|&mu| {
            let p = ThermoParams::new(beta, mu)?;
            let r_v = grand_log_xi(&s_v, &p)?;
            let r_0 = grand_log_xi(&s_0, &p)?;
            let lo = grand_log_xi(&s_0, &p.with_mu(mu - c_prime)?)?.log_xi;
            let hi = grand_log_xi(&s_0, &p.with_mu(mu + c_prime)?)?.log_xi;
            let bound = power_law_bound(mu, c_prime) + (r_v.tail_bound + r_0.tail_bound) / r_0.log_xi;
            Ok(SweepRow {
                control: mu,
                ratio: r_v.log_xi / r_0.log_xi,
                bound,
                flag: false,
                aux: vec![
                    r_v.log_xi / mu.powf(1.5),
                    weyl,
                    r_v.log_xi,
                    r_0.log_xi,
                    lo,
                    hi,
                    c_prime - 2.0 * s_v.tol_eig(),
                    m as f64,
                ],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepTable::new("theorem2", &THEOREM2_AUX, rows)
}

fn check_mu_list(spec: &PotentialSpec, mu_list: &[f64]) -> Result<()> {
    if mu_list.is_empty() {
        return domain("empty chemical potential list");
    }
    if mu_list.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("chemical potentials must be strictly increasing");
    }
    let c = spec.sup_norm();
    if let Some(mu) = mu_list.iter().find(|&&mu| !(mu > c) || !mu.is_finite()) {
        return domain(format!("chemical potential {mu} must exceed sup|V| = {c}"));
    }
    Ok(())
}

pub const THEOREM3_AUX: [&str; 8] = [
    "omega_v",
    "omega_0",
    "omega_0_finite",
    "stability",
    "sandwich_lo",
    "sandwich_hi",
    "gap",
    "lambda",
];

struct BoxLevels {
    lambda: f64,
    potential: Spectrum,
    free: Spectrum,
    gap: f64,
}

/// Ratios `Ω⁽ⱽ⁾_μ / Ω⁽⁰⁾_μ` per unit length.
///
/// `Ω⁽ⱽ⁾` is `ln Ξ / Λ` at the largest box of `lambda_list`; the relative
/// change from the previous box is reported as `aux_stability` and rows above
/// [`SweepOptions::stability_threshold`] are flagged. `Ω⁽⁰⁾` is the
/// thermodynamic-limit integral. The bound encloses `Ω⁽ⱽ⁾` between the free
/// gas of the same box at `μ ∓ C'`.
pub fn theorem3_sweep(
    spec: &PotentialSpec,
    beta: f64,
    mu_list: &[f64],
    lambda_list: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    check_mu_list(spec, mu_list)?;
    if lambda_list.len() < 2 {
        return domain("at least two box lengths are needed for the stability diagnostic");
    }
    if lambda_list.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("box lengths must be strictly increasing");
    }
    let c = spec.sup_norm();
    let mu_max = mu_list[mu_list.len() - 1];
    let boxes = lambda_list
        .par_iter()
        .map(|&lambda| {
            let problem = SpectralProblem::new(spec.clone(), lambda)?.with_grid(opts.grid);
            let m = levels_for_grand(&problem, beta, mu_max + c)?;
            let potential = problem.spectrum(m)?;
            let grid = *potential.grid().expect("solver spectra carry a grid");
            let free = free_spectrum_on(&grid, m)?;
            let gap = perturbation_gap_of(&potential)?;
            Ok(BoxLevels {
                lambda,
                potential,
                free,
                gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = &boxes[boxes.len() - 1];
    let prev = &boxes[boxes.len() - 2];
    let c_prime = last.gap + 2.0 * last.potential.tol_eig();

    let rows = mu_list
        .par_iter()
        .map(|&mu| {
            let p = ThermoParams::new(beta, mu)?;
            let omega = |levels: &Spectrum, lambda: f64, p: &ThermoParams| -> Result<GrandResult> {
                let r = grand_log_xi(levels, p)?;
                Ok(GrandResult {
                    log_xi: r.log_xi / lambda,
                    tail_bound: r.tail_bound / lambda,
                    m_used: r.m_used,
                })
            };
            let w_last = omega(&last.potential, last.lambda, &p)?;
            let w_prev = omega(&prev.potential, prev.lambda, &p)?;
            let stability = ((w_last.log_xi - w_prev.log_xi) / w_last.log_xi).abs();
            let omega_0 = free_grand_log_xi_limit(&p)?;
            let free_finite = omega(&last.free, last.lambda, &p)?.log_xi;
            let lo = omega(&last.free, last.lambda, &p.with_mu(mu - c_prime)?)?.log_xi;
            let hi = omega(&last.free, last.lambda, &p.with_mu(mu + c_prime)?)?;
            let bound =
                (hi.log_xi / omega_0 - 1.0).max(1.0 - lo / omega_0) + (w_last.tail_bound + hi.tail_bound) / omega_0;
            Ok(SweepRow {
                control: mu,
                ratio: w_last.log_xi / omega_0,
                bound,
                flag: !(stability <= opts.stability_threshold),
                aux: vec![
                    w_last.log_xi,
                    omega_0,
                    free_finite,
                    stability,
                    lo,
                    hi.log_xi,
                    last.gap,
                    last.lambda,
                ],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepTable::new("theorem3", &THEOREM3_AUX, rows)
}

pub const WEYL_AUX: [&str; 2] = ["count", "weyl"];

/// Deviation of the counting function from `Λ√t/π` on `t_grid`, with the
/// bound `1 + ΛC/(2π√t)`. Rows with `t < 4C²` are flagged pre-asymptotic.
pub fn weyl_table(spectrum: &Spectrum, t_grid: &[f64]) -> Result<SweepTable> {
    let (lambda, c) = match spectrum.truncation() {
        Truncation::Lowest { lambda, sup_norm } => (lambda, sup_norm),
        Truncation::Complete => return domain("Weyl table needs an operator spectrum"),
    };
    let rows = t_grid
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return domain(format!("t = {t} must be positive"));
            }
            let count = counting_function(spectrum, t)?;
            let weyl = lambda * t.sqrt() / PI;
            Ok(SweepRow {
                control: t,
                ratio: count as f64 - weyl,
                bound: 1.0 + lambda * c / (2.0 * PI * t.sqrt()),
                flag: t < 4.0 * c * c,
                aux: vec![count as f64, weyl],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepTable::new("weyl", &WEYL_AUX, rows)
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Both sides of the free-gas upper bound
/// `Z_N⁽⁰⁾(Λ) ≤ (1/N!) (Λ/β)^N (1 + e^β βN/Λ)^Λ` for `N > Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Est1Check {
    /// Computed `ln Z_N⁽⁰⁾` from levels lowered by `2 tol_eig`, plus its
    /// truncation bound.
    pub lhs: f64,
    pub rhs: f64,
    /// `ln(Λ/N) + ln(1 + e^β βN/Λ)/(N/Λ) - ln β + 1`, which bounds `rhs / N`.
    pub per_particle_bound: f64,
    pub n: usize,
}

impl Est1Check {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs && self.rhs / self.n as f64 <= self.per_particle_bound
    }
}

/// `ln N!` by direct summation.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn est1_check(lambda: f64, n: usize, beta: f64, grid: GridPolicy) -> Result<Est1Check> {
    if !(n as f64 > lambda) {
        return domain(format!("requires N > Λ, got N={n}, Λ={lambda}"));
    }
    let params = ThermoParams::new(beta, 0.0)?;
    let problem = SpectralProblem::new(PotentialSpec::Zero, lambda)?.with_grid(grid);
    let (_, levels) = canonical_log_z_converged(&problem, n, &params)?;
    let lowered = levels.shifted(-2.0 * levels.tol_eig());
    let r = canonical_log_z(&lowered, n, &params)?;
    let nf = n as f64;
    let growth = (1.0 + beta.exp() * beta * nf / lambda).ln();
    let rhs = -ln_factorial(n) + nf * (lambda / beta).ln() + lambda * growth;
    let per_particle_bound = (lambda / nf).ln() + growth / (nf / lambda) - beta.ln() + 1.0;
    Ok(Est1Check {
        lhs: r.log_z + r.truncation_bound,
        rhs,
        per_particle_bound,
        n,
    })
}
