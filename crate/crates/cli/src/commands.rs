//! The five run modes: plot-ready tables in, summaries out.

use crate::config::{ExperimentConfig, OutputFormat, SweepSpec};
use crate::output::{write_json, write_table, Cell, ARTIFACT_VERSION};
use crate::CliError;
use ekman::analysis::{limit_angle_suite, Solution};
use ekman::profile::{GeostrophicWind, StepViscosity};
use ekman::solver::{assemble_dense_system, uniqueness_margin, SolverChoice};
use ekman::verify::{self, VerifyOptions, VerifyReport};
use num_complex::Complex64;
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

/// Resolved run parameters shared by all modes.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub solver: SolverChoice,
    pub config_hash: String,
    pub seed: u64,
    /// Verify mode only: corrupt one flux-row weight so the
    /// matching-residual check demonstrably catches assembly faults.
    pub inject_flux_fault: bool,
}

impl RunContext {
    fn solver_name(&self) -> &'static str {
        match self.solver {
            SolverChoice::Transfer => "transfer",
            SolverChoice::Dense => "dense",
            SolverChoice::Both => "both",
        }
    }
}

fn build_profile(config: &ExperimentConfig) -> Result<StepViscosity, CliError> {
    let spec = config
        .profile
        .as_ref()
        .ok_or_else(|| CliError::Config("missing profile section".into()))?;
    let profile = StepViscosity::new(&spec.jumps, &spec.viscosities)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if profile.merged_layers() > 0 {
        eprintln!(
            "note: merged {} adjacent equal-viscosity layer(s); {} layer(s) remain",
            profile.merged_layers(),
            profile.n_layers()
        );
    }
    Ok(profile)
}

fn build_wind(config: &ExperimentConfig) -> Result<GeostrophicWind, CliError> {
    GeostrophicWind::new(config.wind.u_g, config.wind.v_g)
        .map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct ProfileSummary {
    pub gamma0_deg: f64,
    pub margin_relative: f64,
    pub margin_log10: f64,
    /// Relative residual of the coefficients against the dense system;
    /// absent when the anchored dense assembly would overflow.
    pub residual: Option<f64>,
    pub provenance: String,
    pub solver_requested: String,
    pub n_layers: usize,
    pub merged_layers: usize,
    pub z_max: f64,
    pub sample_count: usize,
    pub wall_time_ms: f64,
    pub config_hash: String,
    pub version: String,
}

/// Solve one profile and write the spiral table, the hodograph table and a
/// summary record.
pub fn run_profile(
    config: &ExperimentConfig,
    ctx: &RunContext,
) -> Result<ProfileSummary, CliError> {
    let start = Instant::now();
    let profile = build_profile(config)?;
    let wind = build_wind(config)?;
    let solution = Solution::solve(&profile, &wind, ctx.solver)?;

    let z_max = config.sampling.z_max.unwrap_or_else(|| solution.default_z_max());
    let count = config.sampling.count;
    let samples = solution.hodograph(z_max, count)?;

    let spiral_rows: Vec<Vec<Cell>> = samples
        .iter()
        .map(|s| {
            vec![
                Cell::Float(s.z),
                Cell::Float(s.u),
                Cell::Float(s.v),
                Cell::Float(s.gamma.to_degrees()),
                Cell::Float(s.deficit),
            ]
        })
        .collect();
    write_table(
        &ctx.out_dir,
        "spiral",
        ctx.format,
        &ctx.config_hash,
        &["z", "u", "v", "gamma_deg", "deficit"],
        &spiral_rows,
    )?;

    let hodograph_rows: Vec<Vec<Cell>> = samples
        .iter()
        .map(|s| vec![Cell::Float(s.u), Cell::Float(s.v), Cell::Float(s.z)])
        .collect();
    write_table(
        &ctx.out_dir,
        "hodograph",
        ctx.format,
        &ctx.config_hash,
        &["u", "v", "z"],
        &hodograph_rows,
    )?;

    let margin = uniqueness_margin(&profile);
    let residual = assemble_dense_system(&profile, &wind)
        .ok()
        .map(|system| system.residual(solution.coefficients()));

    let summary = ProfileSummary {
        gamma0_deg: solution.surface_deflection_angle()?.to_degrees(),
        margin_relative: margin.relative(),
        margin_log10: margin.log10(),
        residual,
        provenance: solution.provenance().as_str().to_string(),
        solver_requested: ctx.solver_name().to_string(),
        n_layers: profile.n_layers(),
        merged_layers: profile.merged_layers(),
        z_max,
        sample_count: count,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        config_hash: ctx.config_hash.clone(),
        version: ARTIFACT_VERSION.to_string(),
    };
    write_json(&ctx.out_dir, "summary", &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub corners_gamma0_deg: Vec<[f64; 3]>,
    pub wall_time_ms: f64,
    pub config_hash: String,
    pub version: String,
}

/// Deflection angle over a log-spaced `(l, h)` grid, long format.
pub fn run_sweep(config: &ExperimentConfig, ctx: &RunContext) -> Result<SweepSummary, CliError> {
    let start = Instant::now();
    let sweep: &SweepSpec = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing sweep section".into()))?;
    let wind = build_wind(config)?;
    let ls = sweep.l.log_grid();
    let hs = sweep.h.log_grid();

    let mut rows = Vec::with_capacity(ls.len() * hs.len());
    for &l in &ls {
        for &h in &hs {
            let profile = StepViscosity::new(&[h], &[1.0, l * l])
                .map_err(|e| CliError::Config(e.to_string()))?;
            let solution = Solution::solve(&profile, &wind, ctx.solver)?;
            let gamma0 = solution.surface_deflection_angle()?.to_degrees();
            rows.push(vec![Cell::Float(l), Cell::Float(h), Cell::Float(gamma0)]);
        }
    }
    write_table(
        &ctx.out_dir,
        "sweep",
        ctx.format,
        &ctx.config_hash,
        &["l", "h", "gamma0_deg"],
        &rows,
    )?;

    let corner = |l: f64, h: f64| -> Result<[f64; 3], CliError> {
        let profile =
            StepViscosity::new(&[h], &[1.0, l * l]).map_err(|e| CliError::Config(e.to_string()))?;
        let solution = Solution::solve(&profile, &wind, ctx.solver)?;
        Ok([l, h, solution.surface_deflection_angle()?.to_degrees()])
    };
    let corners = vec![
        corner(sweep.l.min, sweep.h.min)?,
        corner(sweep.l.min, sweep.h.max)?,
        corner(sweep.l.max, sweep.h.min)?,
        corner(sweep.l.max, sweep.h.max)?,
    ];

    let summary = SweepSummary {
        rows: rows.len(),
        corners_gamma0_deg: corners,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        config_hash: ctx.config_hash.clone(),
        version: ARTIFACT_VERSION.to_string(),
    };
    write_json(&ctx.out_dir, "summary", &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct LimitsSummary {
    pub sequences: Vec<LimitSequenceSummary>,
    pub wall_time_ms: f64,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Serialize)]
pub struct LimitSequenceSummary {
    pub name: String,
    pub metric: String,
    pub max_deviation: f64,
}

/// Evaluate the limiting-angle sequences and write them as a table.
pub fn run_limits(_config: &ExperimentConfig, ctx: &RunContext) -> Result<LimitsSummary, CliError> {
    let start = Instant::now();
    let report = limit_angle_suite();

    let mut rows = Vec::new();
    for seq in &report.sequences {
        for p in &seq.points {
            rows.push(vec![
                Cell::Str(seq.name.clone()),
                Cell::Str(seq.metric.clone()),
                Cell::Float(p.l),
                Cell::Float(p.h),
                Cell::Float(p.gamma0_deg),
                Cell::Float(p.target_deg),
                Cell::Float(p.deviation),
            ]);
        }
    }
    write_table(
        &ctx.out_dir,
        "limits",
        ctx.format,
        &ctx.config_hash,
        &["sequence", "metric", "l", "h", "gamma0_deg", "target_deg", "deviation"],
        &rows,
    )?;

    let summary = LimitsSummary {
        sequences: report
            .sequences
            .iter()
            .map(|s| LimitSequenceSummary {
                name: s.name.clone(),
                metric: s.metric.clone(),
                max_deviation: s.max_deviation,
            })
            .collect(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        config_hash: ctx.config_hash.clone(),
        version: ARTIFACT_VERSION.to_string(),
    };
    write_json(&ctx.out_dir, "summary", &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct ConvergeSummary {
    pub reference_steps: usize,
    pub per_step: Vec<ConvergeRow>,
    pub sup_deviation_monotone: bool,
    pub wall_time_ms: f64,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Serialize)]
pub struct ConvergeRow {
    pub steps: usize,
    pub sup_deviation: f64,
    pub gamma0_deg: f64,
    pub margin_relative: f64,
}

/// Step-function approximations of a continuous viscosity, compared against
/// the richest approximation on a fixed height grid.
pub fn run_converge(
    config: &ExperimentConfig,
    ctx: &RunContext,
) -> Result<ConvergeSummary, CliError> {
    let start = Instant::now();
    let cont = config
        .continuous
        .as_ref()
        .ok_or_else(|| CliError::Config("missing continuous section".into()))?;
    let wind = build_wind(config)?;
    let k = cont.viscosity_fn();

    let max_steps = *cont.steps.iter().max().expect("validated non-empty");
    let reference_steps = 2 * max_steps;
    let reference = StepViscosity::sample_midpoint(&k, cont.cap, reference_steps)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let ref_solution = Solution::solve(&reference, &wind, ctx.solver)?;

    let z_max = config
        .sampling
        .z_max
        .unwrap_or_else(|| ref_solution.default_z_max());
    let count = config.sampling.count;
    let grid: Vec<f64> = (0..count)
        .map(|i| z_max * i as f64 / (count - 1) as f64)
        .collect();
    let ref_psi: Vec<Complex64> = grid
        .iter()
        .map(|&z| ref_solution.psi(z))
        .collect::<Result<_, _>>()?;

    let mut per_step = Vec::new();
    let mut rows = Vec::new();
    for &steps in &cont.steps {
        let approx = StepViscosity::sample_midpoint(&k, cont.cap, steps)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let solution = Solution::solve(&approx, &wind, ctx.solver)?;
        let mut sup: f64 = 0.0;
        for (&z, &r) in grid.iter().zip(&ref_psi) {
            sup = sup.max((solution.psi(z)? - r).norm());
        }
        let gamma0 = solution.surface_deflection_angle()?.to_degrees();
        let margin = uniqueness_margin(&approx);
        rows.push(vec![
            Cell::Int(steps as u64),
            Cell::Float(sup),
            Cell::Float(gamma0),
        ]);
        per_step.push(ConvergeRow {
            steps,
            sup_deviation: sup,
            gamma0_deg: gamma0,
            margin_relative: margin.relative(),
        });
    }
    write_table(
        &ctx.out_dir,
        "converge",
        ctx.format,
        &ctx.config_hash,
        &["n", "sup_deviation", "gamma0_deg"],
        &rows,
    )?;

    let monotone = per_step
        .windows(2)
        .all(|w| w[1].sup_deviation < w[0].sup_deviation);
    let summary = ConvergeSummary {
        reference_steps,
        per_step,
        sup_deviation_monotone: monotone,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        config_hash: ctx.config_hash.clone(),
        version: ARTIFACT_VERSION.to_string(),
    };
    write_json(&ctx.out_dir, "summary", &summary)?;
    Ok(summary)
}

/// Run the verification suite, print one line per check and write the
/// machine-readable report. The caller maps a failed report to exit code 3.
pub fn run_verify(_config: &ExperimentConfig, ctx: &RunContext) -> Result<VerifyReport, CliError> {
    let report = verify::run(&VerifyOptions {
        seed: ctx.seed,
        inject_flux_fault: ctx.inject_flux_fault,
    });
    for check in &report.checks {
        let relation = if check.higher_is_better { ">=" } else { "<=" };
        println!(
            "{} {} (metric {:.3e} {relation} threshold {:.3e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.metric,
            check.threshold,
        );
    }
    write_json(&ctx.out_dir, "verify", &report)?;
    Ok(report)
}
