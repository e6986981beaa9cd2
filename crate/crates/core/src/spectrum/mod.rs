//! Dirichlet spectra of `-d²/dx² + V` on `[0, Λ]`.
//!
//! The operator is discretized with second-order central differences on a
//! uniform grid of `n` interior points. The lowest eigenvalues are found by
//! Sturm-sequence bisection, see [`sturm`].

pub mod sturm;

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::export::fmt_f64;
use crate::potentials::PotentialSpec;
use sturm::{BisectionTolerance, DirichletOperator};

/// Absolute eigenvalue tolerance used unless a caller overrides it.
pub const TOL_EIG: f64 = 1e-10;

/// Default target for the relative discretization error of the highest
/// computed level under [`GridPolicy::Adaptive`].
pub const DEFAULT_GRID_REL_ERROR: f64 = 1e-4;

/// Uniform grid of `n` interior points on `[0, Λ]`; the Dirichlet endpoints
/// are not unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    lambda: f64,
    n: usize,
}

impl Grid {
    pub fn new(lambda: f64, n: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("box length must be positive and finite, got {lambda}"));
        }
        if n == 0 {
            return domain("grid needs at least one interior point");
        }
        Ok(Grid { lambda, n })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.lambda / (self.n as f64 + 1.0)
    }

    /// Interior node `i` (1-based).
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }
}

/// `ε_k⁽⁰⁾(Λ) = π²k²/Λ²`, the exact free Dirichlet spectrum.
pub fn free_eigenvalue(k: usize, lambda: f64) -> Result<f64> {
    if k == 0 {
        return domain("eigenvalue index starts at 1");
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("box length must be positive and finite, got {lambda}"));
    }
    let k = k as f64;
    Ok(PI * PI * k * k / (lambda * lambda))
}

/// Exact `k`-th eigenvalue of the discrete Dirichlet Laplacian on `grid`:
/// `(4/h²) sin²(kπh / 2Λ)`.
pub fn discrete_free_eigenvalue(k: usize, grid: &Grid) -> Result<f64> {
    if k == 0 || k > grid.n {
        return domain(format!("index {k} outside 1..={}", grid.n));
    }
    Ok(discrete_free_unchecked(k, grid))
}

fn discrete_free_unchecked(k: usize, grid: &Grid) -> f64 {
    let h = grid.h();
    let s = (k as f64 * PI * h / (2.0 * grid.lambda)).sin();
    4.0 / (h * h) * s * s
}

/// Constant `C_d` in the leading discretization error `ε - ε_h ≈ C_d h² ε²`,
/// measured on the free ground state of a fine grid.
pub fn discretization_constant() -> f64 {
    let grid = Grid { lambda: PI, n: 1000 };
    let h = grid.h();
    let exact = 1.0;
    (exact - discrete_free_unchecked(1, &grid)) / (h * h * exact * exact)
}

/// How the number of grid points is chosen for a requested level count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPolicy {
    Fixed(usize),
    /// Pick `n` so that `C_d h² ε_M²` stays below `rel_error · max(1, ε_M)`,
    /// with `ε_M` estimated from above by `π²M²/Λ² + C`.
    Adaptive {
        rel_error: f64,
    },
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy::Adaptive {
            rel_error: DEFAULT_GRID_REL_ERROR,
        }
    }
}

impl GridPolicy {
    pub fn grid_for(&self, lambda: f64, m: usize, sup_norm: f64) -> Result<Grid> {
        match *self {
            GridPolicy::Fixed(n) => Grid::new(lambda, n),
            GridPolicy::Adaptive { rel_error } => {
                if !(rel_error > 0.0) {
                    return domain(format!("grid error target must be positive, got {rel_error}"));
                }
                let top = free_eigenvalue(m.max(1), lambda)? + sup_norm;
                let c_d = discretization_constant();
                let h = (rel_error * top.max(1.0) / (c_d * top * top)).sqrt();
                let n = ((lambda / h).ceil() as usize).saturating_sub(1);
                Grid::new(lambda, n.max(m + 1).max(2))
            }
        }
    }
}

/// How far a computed level list is from the full spectrum of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Truncation {
    /// The list is the whole (finite) level set.
    Complete,
    /// The lowest levels of `-d²/dx² + V` on `[0, Λ]`, `sup|V| = C`. Missing
    /// levels obey `ε_k ≥ π²k²/Λ² - C`.
    Lowest { lambda: f64, sup_norm: f64 },
}

/// Strictly increasing single-particle levels with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    truncation: Truncation,
    grid: Option<Grid>,
    potential_id: Option<String>,
    tol_eig: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumMetadata {
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    pub potential_id: Option<String>,
    pub sup_norm: Option<f64>,
    pub tol_eig: f64,
}

impl Spectrum {
    /// A complete, explicitly given level set.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        check_levels(&levels)?;
        Ok(Spectrum {
            eigenvalues: levels,
            truncation: Truncation::Complete,
            grid: None,
            potential_id: None,
            tol_eig: 0.0,
        })
    }

    /// The lowest levels of an operator on `[0, Λ]` with `sup|V| = C`.
    pub fn truncated(levels: Vec<f64>, lambda: f64, sup_norm: f64) -> Result<Self> {
        check_levels(&levels)?;
        if !(lambda > 0.0) || !(sup_norm >= 0.0) {
            return domain(format!("invalid truncation data: lambda={lambda}, C={sup_norm}"));
        }
        Ok(Spectrum {
            eigenvalues: levels,
            truncation: Truncation::Lowest { lambda, sup_norm },
            grid: None,
            potential_id: None,
            tol_eig: 0.0,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.truncation {
            Truncation::Lowest { lambda, .. } => Some(lambda),
            Truncation::Complete => self.grid.map(|g| g.lambda),
        }
    }

    pub fn sup_norm(&self) -> Option<f64> {
        match self.truncation {
            Truncation::Lowest { sup_norm, .. } => Some(sup_norm),
            Truncation::Complete => None,
        }
    }

    pub fn potential_id(&self) -> Option<&str> {
        self.potential_id.as_deref()
    }

    pub fn tol_eig(&self) -> f64 {
        self.tol_eig
    }

    /// The first `m` levels, keeping the provenance.
    pub fn lowest(&self, m: usize) -> Spectrum {
        let mut out = self.clone();
        out.eigenvalues.truncate(m);
        out
    }

    /// Every level moved by `delta`. The tail model widens by `|delta|` so
    /// it remains a valid lower bound.
    pub fn shifted(&self, delta: f64) -> Spectrum {
        let mut out = self.clone();
        for e in &mut out.eigenvalues {
            *e += delta;
        }
        if let Truncation::Lowest { lambda, sup_norm } = out.truncation {
            out.truncation = Truncation::Lowest {
                lambda,
                sup_norm: sup_norm + delta.abs(),
            };
        }
        out
    }

    pub fn metadata(&self) -> SpectrumMetadata {
        SpectrumMetadata {
            lambda: self.lambda(),
            n: self.grid.map(|g| g.n),
            m: self.len(),
            potential_id: self.potential_id.clone(),
            sup_norm: self.sup_norm(),
            tol_eig: self.tol_eig,
        }
    }

    /// CSV with header `k,epsilon`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"k,epsilon\n")?;
        for (i, e) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, fmt_f64(*e))?;
        }
        Ok(())
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if let Some(i) = levels.iter().position(|e| !e.is_finite()) {
        return Err(Error::NonFinite(format!("level {}", i + 1)));
    }
    if let Some(i) = levels.windows(2).position(|w| !(w[1] > w[0])) {
        return domain(format!("levels must be strictly increasing (index {})", i + 2));
    }
    Ok(())
}

/// The discrete operator of `spec` on `grid`.
pub fn build_operator(spec: &PotentialSpec, grid: &Grid) -> Result<DirichletOperator> {
    spec.validate()?;
    let values: Vec<f64> = (1..=grid.n)
        .map(|i| spec.value_unchecked(grid.node(i), grid.lambda))
        .collect();
    DirichletOperator::new(grid.h(), &values)
}

/// Lowest `m` eigenvalues of the discretized `-d²/dx² + V` with the default
/// tolerance [`TOL_EIG`].
pub fn compute_spectrum(spec: &PotentialSpec, lambda: f64, n: usize, m: usize) -> Result<Spectrum> {
    let grid = Grid::new(lambda, n)?;
    compute_spectrum_on(spec, &grid, m, BisectionTolerance::default())
}

pub fn compute_spectrum_on(spec: &PotentialSpec, grid: &Grid, m: usize, tol: BisectionTolerance) -> Result<Spectrum> {
    if m > grid.n {
        return domain(format!("requested {m} levels on a grid of {} points", grid.n));
    }
    let op = build_operator(spec, grid)?;
    let (v_min, v_max) = op.potential_range();
    // Weyl's inequality places ε_k in [d_k + min V, d_k + max V]; the bracket
    // is padded so the solver does not simply reproduce that bound.
    let pad = (v_max - v_min).max(1.0);
    let guess = |k: usize| {
        let d = discrete_free_unchecked(k, grid);
        Some((d + v_min - pad, d + v_max + pad))
    };
    let eigenvalues = sturm::lowest_eigenvalues(&op, m, tol, guess)?;
    Ok(Spectrum {
        eigenvalues,
        truncation: Truncation::Lowest {
            lambda: grid.lambda,
            sup_norm: spec.sup_norm(),
        },
        grid: Some(*grid),
        potential_id: Some(spec.id()),
        tol_eig: tol.abs,
    })
}

/// The exact discrete free spectrum of `grid` (lowest `m` levels), from the
/// closed form rather than the eigensolver.
pub fn free_spectrum_on(grid: &Grid, m: usize) -> Result<Spectrum> {
    if m > grid.n {
        return domain(format!("requested {m} levels on a grid of {} points", grid.n));
    }
    Ok(Spectrum {
        eigenvalues: (1..=m).map(|k| discrete_free_unchecked(k, grid)).collect(),
        truncation: Truncation::Lowest {
            lambda: grid.lambda,
            sup_norm: 0.0,
        },
        grid: Some(*grid),
        potential_id: Some(PotentialSpec::Zero.id()),
        tol_eig: 0.0,
    })
}

/// `F(t) = #{k : ε_k ≤ t}`. Only defined below the highest computed level.
pub fn counting_function(spectrum: &Spectrum, t: f64) -> Result<usize> {
    let top = match spectrum.eigenvalues.last() {
        Some(&e) => e,
        None => return domain("counting function of an empty spectrum"),
    };
    if !(t < top) {
        return domain(format!("t = {t} is not below the highest computed level {top}"));
    }
    Ok(spectrum.eigenvalues.partition_point(|&e| e <= t))
}

/// `max_k |ε_k⁽ⱽ⁾ - ε_k⁽⁰⁾|` over a computed spectrum, against the exact free
/// spectrum of the same grid.
pub fn perturbation_gap_of(spectrum: &Spectrum) -> Result<f64> {
    let grid = spectrum
        .grid
        .ok_or_else(|| Error::Domain("perturbation gap needs a grid spectrum".into()))?;
    Ok(spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| (e - discrete_free_unchecked(i + 1, &grid)).abs())
        .fold(0.0, f64::max))
}

pub fn perturbation_gap(spec: &PotentialSpec, lambda: f64, n: usize, m: usize) -> Result<f64> {
    perturbation_gap_of(&compute_spectrum(spec, lambda, n, m)?)
}

/// A potential in a box together with a grid policy; produces spectra of any
/// requested size.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProblem {
    pub potential: PotentialSpec,
    pub lambda: f64,
    pub grid: GridPolicy,
    pub tol: BisectionTolerance,
}

impl SpectralProblem {
    pub fn new(potential: PotentialSpec, lambda: f64) -> Result<Self> {
        potential.validate()?;
        Grid::new(lambda, 1)?;
        Ok(SpectralProblem {
            potential,
            lambda,
            grid: GridPolicy::default(),
            tol: BisectionTolerance::default(),
        })
    }

    pub fn with_grid(mut self, grid: GridPolicy) -> Self {
        self.grid = grid;
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.potential.sup_norm()
    }

    pub fn grid_for(&self, m: usize) -> Result<Grid> {
        self.grid.grid_for(self.lambda, m, self.sup_norm())
    }

    pub fn spectrum(&self, m: usize) -> Result<Spectrum> {
        let grid = self.grid_for(m)?;
        compute_spectrum_on(&self.potential, &grid, m, self.tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_eigenvalue_examples() {
        assert!((free_eigenvalue(1, PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((free_eigenvalue(2, 1.0).unwrap() - 39.47841760435743).abs() < 1e-12);
        assert!((free_eigenvalue(10, 10.0).unwrap() - 9.869604401089358).abs() < 1e-13);
        assert!(free_eigenvalue(0, 1.0).is_err());
        assert!(free_eigenvalue(1, 0.0).is_err());
        assert!(free_eigenvalue(1, -2.0).is_err());
    }

    #[test]
    fn discrete_free_single_point_matches_matrix() {
        // the 1x1 matrix is [2/h²] with h = Λ/2
        let grid = Grid::new(PI, 1).unwrap();
        let h = PI / 2.0;
        let d = discrete_free_eigenvalue(1, &grid).unwrap();
        assert!((d - 2.0 / (h * h)).abs() < 1e-14);
    }

    #[test]
    fn discrete_free_is_second_order() {
        let lambda = 2.0;
        let k = 3;
        let exact = free_eigenvalue(k, lambda).unwrap();
        let mut prev = None;
        for n in [99, 199, 399, 799] {
            let err = exact - discrete_free_eigenvalue(k, &Grid::new(lambda, n).unwrap()).unwrap();
            assert!(err > 0.0);
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn discrete_free_top_below_bound() {
        let grid = Grid::new(1.0, 50).unwrap();
        let h = grid.h();
        assert!(discrete_free_eigenvalue(50, &grid).unwrap() < 4.0 / (h * h));
        assert!(discrete_free_eigenvalue(51, &grid).is_err());
        assert!(discrete_free_eigenvalue(0, &grid).is_err());
    }

    #[test]
    fn calibrated_constant_is_one_twelfth() {
        assert!((discretization_constant() - 1.0 / 12.0).abs() < 1e-5);
    }

    #[test]
    fn zero_potential_recovers_integers() {
        let s = compute_spectrum(&PotentialSpec::Zero, PI, 4000, 5).unwrap();
        let h = s.grid().unwrap().h();
        for (i, e) in s.eigenvalues().iter().enumerate() {
            let k = (i + 1) as f64;
            // leading discretization error h²k⁴/12
            let err = k * k - e;
            assert!(err > 0.0 && err < 1.01 * h * h * k.powi(4) / 12.0, "{e}");
            assert!(err < 4e-5);
        }
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let free = compute_spectrum(&PotentialSpec::Zero, 3.0, 500, 20).unwrap();
        let c = 2.75;
        let shifted = compute_spectrum(&PotentialSpec::Constant { amplitude: c }, 3.0, 500, 20).unwrap();
        for (a, b) in free.eigenvalues().iter().zip(shifted.eigenvalues()) {
            assert!((b - a - c).abs() < 2.0 * TOL_EIG);
        }
    }

    #[test]
    fn compute_spectrum_errors() {
        assert!(matches!(
            compute_spectrum(&PotentialSpec::Zero, 1.0, 10, 11),
            Err(Error::Domain(_))
        ));
        let bad = PotentialSpec::Constant {
            amplitude: f64::INFINITY,
        };
        assert!(matches!(compute_spectrum(&bad, 1.0, 10, 2), Err(Error::NonFinite(_))));
    }

    #[test]
    fn counting_examples() {
        let s = Spectrum::from_levels((1..=6).map(|k| (k * k) as f64).collect()).unwrap();
        assert_eq!(counting_function(&s, 10.0).unwrap(), 3);
        assert_eq!(counting_function(&s, 9.0).unwrap(), 3);
        assert_eq!(counting_function(&s, 0.5).unwrap(), 0);
        assert!(counting_function(&s, 36.0).is_err());
        assert!(counting_function(&s, 100.0).is_err());
    }

    #[test]
    fn gap_examples() {
        let lambda = 4.0;
        let (n, m) = (600, 40);
        assert!(perturbation_gap(&PotentialSpec::Zero, lambda, n, m).unwrap() < 2.0 * TOL_EIG);
        let c = -1.3;
        let g = perturbation_gap(&PotentialSpec::Constant { amplitude: c }, lambda, n, m).unwrap();
        assert!((g - c.abs()).abs() < 2.0 * TOL_EIG);
        let g = perturbation_gap(&PotentialSpec::cosine(0.7, 1.0), lambda, n, m).unwrap();
        assert!(g <= 0.7 + 2e-10, "{g}");
        assert!(g > 0.0);
    }

    #[test]
    fn from_levels_rejects_unsorted() {
        assert!(Spectrum::from_levels(vec![1.0, 1.0]).is_err());
        assert!(Spectrum::from_levels(vec![2.0, 1.0]).is_err());
        assert!(Spectrum::from_levels(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn adaptive_grid_meets_target() {
        let policy = GridPolicy::default();
        let lambda = 5.0;
        let m = 60;
        let grid = policy.grid_for(lambda, m, 1.0).unwrap();
        let s = compute_spectrum_on(&PotentialSpec::Zero, &grid, m, BisectionTolerance::default()).unwrap();
        let top = free_eigenvalue(m, lambda).unwrap();
        let err = (top - s.eigenvalues()[m - 1]) / top;
        assert!(err > 0.0 && err < 1.05e-4, "{err}");
    }

    #[test]
    fn csv_and_metadata() {
        let s = compute_spectrum(&PotentialSpec::Zero, PI, 100, 2).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,epsilon");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,9.99"));
        let meta = serde_json::to_value(s.metadata()).unwrap();
        assert_eq!(meta["n"], 100);
        assert_eq!(meta["M"], 2);
        assert_eq!(meta["tol_eig"], 1e-10);
    }
}
