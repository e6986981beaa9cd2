//! Executes one experiment and renders its CSV and JSON artifacts.

use std::f64::consts::PI;
use std::path::PathBuf;

use fermi_lab::asymptotics::{
    default_theorem1_schedule, default_theorem2_mu, default_theorem3_lambdas, default_theorem3_mu, est1_check,
    linspace, theorem1_sweep, theorem2_sweep, theorem3_sweep, weyl_table, Est1Check, SweepOptions, SweepTable,
};
use fermi_lab::ensembles::{
    canonical_log_z_converged, grand_canonical_consistency_check, grand_log_xi, levels_for_grand, write_canonical_csv,
    write_grand_csv, CanonicalResult, GrandResult, ThermoParams, TRUNCATION_TARGET,
};
use fermi_lab::export::fmt_f64;
use fermi_lab::spectrum::TOL_EIG;
use fermi_lab::{GridPolicy, PotentialSpec, SpectralProblem, Spectrum};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{build_info, write_atomic, Artifact, BuildInfo};
use crate::random::{random_levels, rng};

/// Rendered results of one experiment, not yet written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: Experiment,
    pub artifacts: Vec<Artifact>,
    pub rows: usize,
    pub flagged: usize,
    /// Experiment-specific `key=value` pairs for the summary line.
    pub highlights: String,
}

#[derive(Serialize)]
struct Tolerances {
    tol_eig: f64,
    truncation_target: f64,
    grid: GridPolicy,
}

#[derive(Serialize)]
struct Mirror<'a, T: Serialize> {
    experiment: &'static str,
    build: BuildInfo,
    config: &'a ExperimentConfig,
    potential: PotentialSpec,
    potential_id: String,
    sup_norm: f64,
    tolerances: Tolerances,
    data: T,
}

struct Ctx {
    experiment: Experiment,
    cfg: ExperimentConfig,
    potential: PotentialSpec,
    beta: f64,
    grid: GridPolicy,
}

impl Ctx {
    fn artifacts<T: Serialize>(&self, csv: Vec<u8>, data: T) -> Vec<Artifact> {
        let mirror = Mirror {
            experiment: self.experiment.name(),
            build: build_info(),
            config: &self.cfg,
            potential: self.potential.clone(),
            potential_id: self.potential.id(),
            sup_norm: self.potential.sup_norm(),
            tolerances: Tolerances {
                tol_eig: TOL_EIG,
                truncation_target: TRUNCATION_TARGET,
                grid: self.grid,
            },
            data,
        };
        let mut json = serde_json::to_vec_pretty(&mirror).expect("mirror serializes");
        json.push(b'\n');
        let stem = self.experiment.name();
        vec![
            Artifact {
                file_name: format!("{stem}.csv"),
                bytes: csv,
            },
            Artifact {
                file_name: format!("{stem}.json"),
                bytes: json,
            },
        ]
    }

    fn problem(&self, lambda: f64) -> Result<SpectralProblem, CliError> {
        Ok(SpectralProblem::new(self.potential.clone(), lambda)?.with_grid(self.grid))
    }

    fn sweep_options(&self) -> SweepOptions {
        let defaults = SweepOptions::default();
        SweepOptions {
            grid: self.grid,
            stability_threshold: self.cfg.stability_threshold.unwrap_or(defaults.stability_threshold),
        }
    }
}

/// Runs the experiment selected in `cfg` without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let experiment = cfg.validate()?;
    let mut recorded = cfg.clone();
    recorded.output_dir = None;
    let ctx = Ctx {
        experiment,
        potential: cfg.potential(),
        beta: cfg.beta(),
        grid: cfg.grid_policy(),
        cfg: recorded,
    };
    match experiment {
        Experiment::Spectrum => spectrum(&ctx),
        Experiment::Canonical => canonical(&ctx),
        Experiment::Grand => grand(&ctx),
        Experiment::Weyl => weyl(&ctx),
        Experiment::Theorem1 => {
            let schedule = ctx.cfg.schedule.clone().unwrap_or_else(default_theorem1_schedule);
            let t = theorem1_sweep(&ctx.potential, ctx.beta, &schedule, &ctx.sweep_options())?;
            sweep(&ctx, t)
        }
        Experiment::Theorem2 => {
            let lambda = ctx.cfg.lambda.unwrap_or(5.0);
            let mu = ctx.cfg.mu_list.clone().unwrap_or_else(default_theorem2_mu);
            let t = theorem2_sweep(&ctx.potential, lambda, ctx.beta, &mu, &ctx.sweep_options())?;
            sweep(&ctx, t)
        }
        Experiment::Theorem3 => {
            let mu = ctx.cfg.mu_list.clone().unwrap_or_else(default_theorem3_mu);
            let lambdas = ctx.cfg.lambda_list.clone().unwrap_or_else(default_theorem3_lambdas);
            let t = theorem3_sweep(&ctx.potential, ctx.beta, &mu, &lambdas, &ctx.sweep_options())?;
            sweep(&ctx, t)
        }
        Experiment::Est1 => est1(&ctx),
        Experiment::Consistency => consistency(&ctx),
    }
}

/// Executes, writes the artifacts atomically and returns the summary line.
/// Flagged rows are written before the `Flagged` error is returned.
pub fn run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let outcome = execute(cfg)?;
    let dir = cfg.output_dir();
    let paths = write_atomic(&dir, &outcome.artifacts)?;
    let summary = summary_line(&outcome, &paths);
    if outcome.flagged > 0 {
        println!("{summary}");
        return Err(CliError::Flagged(format!(
            "{} of {} {} rows flagged",
            outcome.flagged, outcome.rows, outcome.experiment
        )));
    }
    Ok(summary)
}

fn summary_line(outcome: &Outcome, paths: &[PathBuf]) -> String {
    let csv = paths.first().map(|p| p.display().to_string()).unwrap_or_default();
    format!(
        "{}: rows={} flagged={} {} csv={}",
        outcome.experiment, outcome.rows, outcome.flagged, outcome.highlights, csv
    )
}

fn spectrum(ctx: &Ctx) -> Result<Outcome, CliError> {
    let lambda = ctx.cfg.lambda.unwrap_or(10.0);
    let m = ctx.cfg.levels.unwrap_or(100);
    let s = ctx.problem(lambda)?.spectrum(m)?;
    let mut csv = Vec::new();
    s.write_csv(&mut csv)?;
    #[derive(Serialize)]
    struct Data<'a> {
        metadata: fermi_lab::spectrum::SpectrumMetadata,
        eigenvalues: &'a [f64],
    }
    let ev = s.eigenvalues();
    Ok(Outcome {
        experiment: ctx.experiment,
        rows: s.len(),
        flagged: 0,
        highlights: format!(
            "n={} eps_1={} eps_M={}",
            s.grid().map_or(0, |g| g.n()),
            fmt_f64(ev[0]),
            fmt_f64(ev[ev.len() - 1])
        ),
        artifacts: ctx.artifacts(
            csv,
            Data {
                metadata: s.metadata(),
                eigenvalues: ev,
            },
        ),
    })
}

fn canonical(ctx: &Ctx) -> Result<Outcome, CliError> {
    let lambda = ctx.cfg.lambda.unwrap_or(10.0);
    let particles = ctx.cfg.particles.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    let problem = ctx.problem(lambda)?;
    let params = ThermoParams::new(ctx.beta, 0.0)?;
    let results = particles
        .par_iter()
        .map(|&n| {
            let (r, _) = canonical_log_z_converged(&problem, n, &params)?;
            Ok((n, ctx.beta, r))
        })
        .collect::<Result<Vec<(usize, f64, CanonicalResult)>, fermi_lab::Error>>()?;
    let mut csv = Vec::new();
    write_canonical_csv(&mut csv, &results)?;
    let max_bound = results.iter().map(|r| r.2.truncation_bound).fold(0.0, f64::max);
    Ok(Outcome {
        experiment: ctx.experiment,
        rows: results.len(),
        flagged: 0,
        highlights: format!("max_trunc_bound={}", fmt_f64(max_bound)),
        artifacts: ctx.artifacts(csv, results.iter().map(|(n, _, r)| (n, r)).collect::<Vec<_>>()),
    })
}

fn grand(ctx: &Ctx) -> Result<Outcome, CliError> {
    let lambda = ctx.cfg.lambda.unwrap_or(10.0);
    let mu_list = ctx
        .cfg
        .mu_list
        .clone()
        .unwrap_or_else(|| vec![1.0, 5.0, 10.0, 25.0, 50.0]);
    let problem = ctx.problem(lambda)?;
    let mu_max = mu_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = levels_for_grand(&problem, ctx.beta, mu_max)?;
    let s = problem.spectrum(m)?;
    let results = mu_list
        .iter()
        .map(|&mu| {
            let p = ThermoParams::new(ctx.beta, mu)?;
            Ok((p, grand_log_xi(&s, &p)?))
        })
        .collect::<Result<Vec<(ThermoParams, GrandResult)>, fermi_lab::Error>>()?;
    let mut csv = Vec::new();
    write_grand_csv(&mut csv, &results)?;
    let max_tail = results.iter().map(|r| r.1.tail_bound).fold(0.0, f64::max);
    Ok(Outcome {
        experiment: ctx.experiment,
        rows: results.len(),
        flagged: 0,
        highlights: format!("levels={m} max_tail_bound={}", fmt_f64(max_tail)),
        artifacts: ctx.artifacts(csv, results),
    })
}

fn weyl(ctx: &Ctx) -> Result<Outcome, CliError> {
    let lambda = ctx.cfg.lambda.unwrap_or(10.0);
    let t_grid = ctx.cfg.t_grid.clone().unwrap_or_else(|| linspace(10.0, 500.0, 50));
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let c = ctx.potential.sup_norm();
    // ε_k ≥ π²k²/Λ² - C puts every level above t_max once k exceeds this
    let m = ctx
        .cfg
        .levels
        .unwrap_or_else(|| (lambda / PI * (t_max + c).sqrt()).ceil() as usize + 2);
    let s = ctx.problem(lambda)?.spectrum(m)?;
    sweep(ctx, weyl_table(&s, &t_grid)?)
}

fn sweep(ctx: &Ctx, table: SweepTable) -> Result<Outcome, CliError> {
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let rows = table.rows();
    let dev = |r: &fermi_lab::asymptotics::SweepRow| {
        if ctx.experiment == Experiment::Weyl {
            r.ratio.abs()
        } else {
            (r.ratio - 1.0).abs()
        }
    };
    let max_dev = rows.iter().map(dev).fold(0.0, f64::max);
    let within = rows.iter().filter(|r| dev(r) <= r.bound).count();
    Ok(Outcome {
        experiment: ctx.experiment,
        rows: rows.len(),
        flagged: rows.iter().filter(|r| r.flag).count(),
        highlights: format!("max_dev={} within_bound={}/{}", fmt_f64(max_dev), within, rows.len()),
        artifacts: ctx.artifacts(csv, &table),
    })
}

fn est1(ctx: &Ctx) -> Result<Outcome, CliError> {
    let lambdas = ctx.cfg.lambda_list.clone().unwrap_or_else(|| vec![4.0, 8.0, 16.0]);
    let mut cases = Vec::new();
    for &lambda in &lambdas {
        match &ctx.cfg.particles {
            Some(ns) => cases.extend(ns.iter().map(|&n| (lambda, n))),
            None => cases.extend([2.0, 4.0, 8.0].iter().map(|f| (lambda, (f * lambda).round() as usize))),
        }
    }
    let checks = cases
        .par_iter()
        .map(|&(lambda, n)| Ok((lambda, est1_check(lambda, n, ctx.beta, ctx.grid)?)))
        .collect::<Result<Vec<(f64, Est1Check)>, fermi_lab::Error>>()?;
    let mut csv = b"lambda,N,beta,lhs,rhs,per_particle_bound,holds\n".to_vec();
    for (lambda, c) in &checks {
        csv.extend(
            format!(
                "{},{},{},{},{},{},{}\n",
                fmt_f64(*lambda),
                c.n,
                fmt_f64(ctx.beta),
                fmt_f64(c.lhs),
                fmt_f64(c.rhs),
                fmt_f64(c.per_particle_bound),
                c.holds() as u8
            )
            .bytes(),
        );
    }
    let violations = checks.iter().filter(|(_, c)| !c.holds()).count();
    Ok(Outcome {
        experiment: ctx.experiment,
        rows: checks.len(),
        flagged: violations,
        highlights: format!("violations={violations}"),
        artifacts: ctx.artifacts(csv, &checks),
    })
}

#[derive(Debug, Clone, Serialize)]
struct ConsistencyTrial {
    levels: usize,
    beta: f64,
    mu: f64,
    discrepancy: f64,
}

fn consistency(ctx: &Ctx) -> Result<Outcome, CliError> {
    let trials = ctx.cfg.trials.unwrap_or(50);
    let m = ctx.cfg.levels.unwrap_or(20);
    let mut rng = rng(ctx.cfg.seed());
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let levels = random_levels(&mut rng, m, 0.0, 20.0);
        let beta = rng.gen_range(0.2..2.0);
        let mu = rng.gen_range(-5.0..25.0);
        let s = Spectrum::from_levels(levels)?;
        let discrepancy = grand_canonical_consistency_check(&s, &ThermoParams::new(beta, mu)?)?;
        rows.push(ConsistencyTrial {
            levels: m,
            beta,
            mu,
            discrepancy,
        });
    }
    let mut csv = b"trial,levels,beta,mu,discrepancy,flag\n".to_vec();
    let mut flagged = 0;
    for (i, r) in rows.iter().enumerate() {
        let flag = !(r.discrepancy < TRUNCATION_TARGET);
        flagged += flag as usize;
        csv.extend(
            format!(
                "{i},{},{},{},{},{}\n",
                r.levels,
                fmt_f64(r.beta),
                fmt_f64(r.mu),
                fmt_f64(r.discrepancy),
                flag as u8
            )
            .bytes(),
        );
    }
    let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    Ok(Outcome {
        experiment: ctx.experiment,
        rows: rows.len(),
        flagged,
        highlights: format!("max_discrepancy={}", fmt_f64(worst)),
        artifacts: ctx.artifacts(csv, &rows),
    })
}
