//! Reduced-scale oracle and invariant suite for checking a build in the field.

use fermi_lab::asymptotics::{
    est1_check, linspace, theorem1_sweep, theorem2_sweep, theorem3_sweep, weyl_table, SweepOptions,
};
use fermi_lab::ensembles::{
    canonical_log_z, canonical_log_z_bruteforce, grand_canonical_consistency_check, ThermoParams,
};
use fermi_lab::export::fmt_f64;
use fermi_lab::spectrum::{compute_spectrum, discrete_free_eigenvalue, free_eigenvalue, perturbation_gap};
use fermi_lab::{Grid, GridPolicy, PotentialSpec, Spectrum};
use rand::Rng;

use crate::error::CliError;
use crate::output::{write_atomic, Artifact};
use crate::random::{random_levels, rng};

/// Outcome of one check: the worst observed value against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            value,
            limit,
            pass: value <= limit,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} value={} limit={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt_f64(self.value),
            fmt_f64(self.limit)
        )
    }
}

type CheckResult = Result<Check, fermi_lab::Error>;

fn eigensolver_exactness() -> CheckResult {
    let lambda = std::f64::consts::PI;
    let s = compute_spectrum(&PotentialSpec::Zero, lambda, 4000, 100)?;
    let grid = Grid::new(lambda, 4000)?;
    let mut worst: f64 = 0.0;
    for (i, &e) in s.eigenvalues().iter().enumerate() {
        let exact = discrete_free_eigenvalue(i + 1, &grid)?;
        worst = worst.max(((e - exact) / exact).abs());
    }
    Ok(Check::at_most("eigensolver_exactness", worst, 1e-12))
}

fn continuum_limit() -> CheckResult {
    let lambda = std::f64::consts::PI;
    let s = compute_spectrum(&PotentialSpec::Zero, lambda, 4000, 20)?;
    let mut worst: f64 = 0.0;
    for (i, &e) in s.eigenvalues().iter().enumerate() {
        let exact = free_eigenvalue(i + 1, lambda)?;
        worst = worst.max(((e - exact) / exact).abs());
    }
    Ok(Check::at_most("continuum_limit", worst, 1e-4))
}

fn perturbation_gaps() -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    for amplitude in [0.5, 1.0, 2.0] {
        for spec in [
            PotentialSpec::cosine(amplitude, 1.0),
            PotentialSpec::square_well(amplitude, 0.25, 0.75),
        ] {
            let gap = perturbation_gap(&spec, 5.0, 2000, 100)?;
            worst = worst.max(gap - amplitude);
        }
    }
    Ok(Check::at_most("perturbation_gap_le_sup_norm", worst, 1e-8))
}

fn canonical_oracle(seed: u64) -> CheckResult {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.gen_range(1..=12);
        let n = rng.gen_range(1..=m.min(6));
        let beta = rng.gen_range(0.1..3.0);
        let levels = random_levels(&mut rng, m, -2.0, 10.0);
        let s = Spectrum::from_levels(levels.clone())?;
        let dp = canonical_log_z(&s, n, &ThermoParams::new(beta, 0.0)?)?.log_z;
        let brute = canonical_log_z_bruteforce(&levels, n, beta)?;
        worst = worst.max(((dp - brute) / brute.abs().max(1e-300)).abs());
    }
    Ok(Check::at_most("canonical_dp_vs_bruteforce", worst, 1e-12))
}

fn cross_ensemble(seed: u64) -> CheckResult {
    let mut rng = rng(seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let levels = random_levels(&mut rng, 20, 0.0, 20.0);
        let p = ThermoParams::new(rng.gen_range(0.2..2.0), rng.gen_range(-5.0..25.0))?;
        worst = worst.max(grand_canonical_consistency_check(&Spectrum::from_levels(levels)?, &p)?);
    }
    Ok(Check::at_most("cross_ensemble_identity", worst, 1e-10))
}

fn free_gas_upper_bound() -> CheckResult {
    let mut violations = 0;
    for beta in [0.5, 1.0, 2.0] {
        for n in [8, 16] {
            let c = est1_check(4.0, n, beta, GridPolicy::default())?;
            violations += !c.holds() as usize;
        }
    }
    Ok(Check::at_most(
        "free_gas_upper_bound_violations",
        violations as f64,
        0.0,
    ))
}

fn density_sweep() -> Result<Vec<Check>, fermi_lab::Error> {
    let schedule: Vec<(usize, f64)> = (4..=12).map(|m| (m * m, m as f64)).collect();
    let opts = SweepOptions::default();
    let free = theorem1_sweep(&PotentialSpec::Zero, 1.0, &schedule, &opts)?;
    let per_n = free.aux_column("log_z0_per_n").expect("column exists");
    let decreasing = per_n.windows(2).filter(|w| !(w[1] < w[0])).count();
    let cosine = theorem1_sweep(&PotentialSpec::cosine(1.0, 1.0), 1.0, &schedule, &opts)?;
    let excess = cosine
        .rows()
        .iter()
        .map(|r| (r.ratio - 1.0).abs() - r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let bound_increases = cosine.rows().windows(2).filter(|w| !(w[1].bound < w[0].bound)).count();
    Ok(vec![
        Check::at_most("free_log_z_per_n_decreasing_violations", decreasing as f64, 0.0),
        Check::at_most("canonical_ratio_minus_bound", excess, 0.0),
        Check::at_most("canonical_bound_increases", bound_increases as f64, 0.0),
    ])
}

fn counting_law() -> CheckResult {
    let lambda = 10.0;
    let spec = PotentialSpec::cosine(1.0, 1.0);
    let t_grid = linspace(10.0, 500.0, 99);
    let m = (lambda / std::f64::consts::PI * 501f64.sqrt()).ceil() as usize + 2;
    let s = fermi_lab::SpectralProblem::new(spec, lambda)?.spectrum(m)?;
    let table = weyl_table(&s, &t_grid)?;
    let limit = 1.0 + lambda / (2.0 * std::f64::consts::PI * 10f64.sqrt());
    let worst = table.rows().iter().map(|r| r.ratio.abs()).fold(0.0, f64::max);
    Ok(Check::at_most("weyl_deviation", worst, limit))
}

fn box_sweep() -> Result<Vec<Check>, fermi_lab::Error> {
    let spec = PotentialSpec::cosine(1.0, 1.0);
    let mu = [25.0, 50.0, 100.0, 200.0, 400.0];
    let t = theorem2_sweep(&spec, 5.0, 1.0, &mu, &SweepOptions::default())?;
    let excess = t
        .rows()
        .iter()
        .map(|r| (r.ratio - 1.0).abs() - 5.0 / r.control)
        .fold(f64::NEG_INFINITY, f64::max);
    let weyl = 2.0 / 3.0 * 5.0 / std::f64::consts::PI;
    let per_mu = t.aux_column("log_xi_per_mu32").expect("column exists");
    let rel = (per_mu[per_mu.len() - 1] - weyl).abs() / weyl;
    Ok(vec![
        Check::at_most("grand_ratio_minus_5c_over_mu", excess, 0.0),
        Check::at_most("grand_weyl_constant_rel_error", rel, 0.05),
    ])
}

fn per_length_sweep() -> CheckResult {
    let spec = PotentialSpec::cosine(1.0, 1.0);
    let t = theorem3_sweep(&spec, 1.0, &[50.0, 100.0], &[40.0, 80.0], &SweepOptions::default())?;
    let excess = t
        .rows()
        .iter()
        .map(|r| (r.ratio - 1.0).abs() - 5.0 / r.control)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Check::at_most("per_length_ratio_minus_5c_over_mu", excess, 0.0))
}

fn determinism() -> CheckResult {
    let render = || -> Result<Vec<u8>, fermi_lab::Error> {
        let t = theorem2_sweep(
            &PotentialSpec::cosine(1.0, 1.0),
            5.0,
            1.0,
            &[25.0, 100.0],
            &SweepOptions::default(),
        )?;
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        Ok(buf)
    };
    let same = render()? == render()?;
    Ok(Check::at_most(
        "repeat_run_byte_identical",
        if same { 0.0 } else { 1.0 },
        0.0,
    ))
}

/// Runs every check; `seed` drives the randomized suites.
pub fn checks(seed: u64) -> Result<Vec<Check>, CliError> {
    let mut out = vec![
        eigensolver_exactness()?,
        continuum_limit()?,
        perturbation_gaps()?,
        canonical_oracle(seed)?,
        cross_ensemble(seed)?,
        free_gas_upper_bound()?,
    ];
    out.extend(density_sweep()?);
    out.push(counting_law()?);
    out.extend(box_sweep()?);
    out.push(per_length_sweep()?);
    out.push(determinism()?);
    Ok(out)
}

pub fn render_csv(checks: &[Check]) -> Vec<u8> {
    let mut csv = b"check,pass,value,limit\n".to_vec();
    for c in checks {
        csv.extend(
            format!(
                "{},{},{},{}\n",
                c.name,
                c.pass as u8,
                fmt_f64(c.value),
                fmt_f64(c.limit)
            )
            .bytes(),
        );
    }
    csv
}

/// Prints one line per check, writes `selftest.csv` and fails if any check
/// failed.
pub fn run(seed: u64, out_dir: &std::path::Path) -> Result<String, CliError> {
    let results = checks(seed)?;
    for c in &results {
        println!("{}", c.line());
    }
    let paths = write_atomic(
        out_dir,
        &[Artifact {
            file_name: "selftest.csv".into(),
            bytes: render_csv(&results),
        }],
    )?;
    let failed = results.iter().filter(|c| !c.pass).count();
    let summary = format!(
        "selftest: checks={} failed={failed} seed={seed} csv={}",
        results.len(),
        paths[0].display()
    );
    if failed > 0 {
        println!("{summary}");
        return Err(CliError::Runtime(format!("{failed} selftest checks failed")));
    }
    Ok(summary)
}
