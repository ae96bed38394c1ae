use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{BeamParams, ExperimentConfig, ExperimentKind, CONFIG_SCHEMA};
use super::export::{write_json, Table};
use crate::control_loop::{
    cost, fit_log_decay, iterate_with_checkpoints, verify_control, ControlProblem, LogDecayFit, DEFAULT_BETA,
};
use crate::error::{Error, Result};
use crate::ode::OdeStats;
use crate::spectral_basis::{enumerate_modes, project_with, ModeSet, ProjectionRule, Region};
use crate::wave_dynamics::{energy, evolve_forced, SpectralState};

/// Cost of the partial control `f_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub n: usize,
    pub cost: f64,
    /// `cost / (n + 1)`.
    pub normalized: f64,
    /// `2 d_{2n}`, the squared error of `f_n`.
    pub predicted_error: f64,
}

/// Beam projection diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub rule: ProjectionRule,
    /// `max_j |c_j - c_j'| / max_j |c_j|` between the rule and its doubled order.
    pub discrepancy: f64,
    /// `H¹₀ × L²` norm² of the projected data, `Σ λ a² + b²`.
    pub norm_sq: f64,
    /// `ℓ` range used for the concentration figure.
    pub band: (f64, f64),
    /// Share of `norm_sq` carried by modes with `ℓ` in `band`.
    pub band_fraction: f64,
    /// Largest `ℓ` present in the mode set.
    pub max_l: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub experiment: ExperimentKind,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub modes: usize,
    pub iterations: usize,
    pub horizon: f64,
    pub tol: f64,
    pub region: Region,
    pub initial_energy: f64,
    pub target_energy: f64,
    /// `d_j` for `j = -1..=2N`.
    pub d: Vec<f64>,
    pub d_monotonicity_violation: f64,
    /// `d_{2N} / d_{-1}`.
    pub d_ratio: f64,
    pub predicted_error: f64,
    pub achieved_error: f64,
    pub error_mismatch: f64,
    pub energy_accounting_error: f64,
    pub costs: Vec<CostPoint>,
    /// Fit of `2 d_{2n}` against `[ln(1 + 2n)]^{-2β}` with `β = 1/2`.
    pub decay_fit: Option<LogDecayFit>,
    pub m_bound: f64,
    pub m_bound_growing: bool,
    pub projection: Option<ProjectionReport>,
    pub stats: OdeStats,
}

impl RunSummary {
    fn pending(cfg: &ExperimentConfig) -> Self {
        Self {
            schema: CONFIG_SCHEMA.to_string(),
            experiment: cfg.experiment,
            status: "running".into(),
            error: None,
            modes: cfg.modes,
            iterations: cfg.iterations,
            horizon: cfg.horizon,
            tol: cfg.tol,
            region: cfg.region,
            initial_energy: 0.0,
            target_energy: 0.0,
            d: Vec::new(),
            d_monotonicity_violation: 0.0,
            d_ratio: 0.0,
            predicted_error: 0.0,
            achieved_error: 0.0,
            error_mismatch: 0.0,
            energy_accounting_error: 0.0,
            costs: Vec::new(),
            decay_fit: None,
            m_bound: 0.0,
            m_bound_growing: false,
            projection: None,
            stats: OdeStats::default(),
        }
    }
}

/// JSON view of a control run; the control itself goes to `control.csv`.
#[derive(Serialize)]
struct ControlRunRecord<'a> {
    schema: &'a str,
    modes: usize,
    iterations: usize,
    horizon: f64,
    tol: f64,
    region: Region,
    d: &'a [f64],
    dissipated: &'a [f64],
    seed_norms: &'a [f64],
    m_bound: f64,
    m_bound_growing: bool,
    predicted_error: f64,
    cost: f64,
    seeds: &'a [SpectralState],
    terminals: &'a [SpectralState],
}

/// Where a run wrote its artifacts, and what it found.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: RunSummary,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";

/// Example 1: control from rest toward `(e₁ + e₂, e₁)`.
pub fn run_example1(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(cfg, ExperimentKind::Example1)?;
    run(cfg)
}

/// Example 2: control of the projected Gaussian beam toward rest.
pub fn run_example2(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(cfg, ExperimentKind::Example2)?;
    if cfg.beam.is_none() {
        return Err(Error::invalid("beam", "example2 needs beam parameters"));
    }
    run(cfg)
}

/// Any configuration, including custom initial and target data.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir)?;
    write_json(&dir.join(CONFIG_FILE), cfg)?;
    let mut summary = RunSummary::pending(cfg);
    match execute(cfg, &dir, &mut summary) {
        Ok(()) => {
            summary.status = "ok".into();
            write_json(&dir.join(SUMMARY_FILE), &summary)?;
            Ok(RunOutcome { dir, summary })
        }
        Err(e) => {
            summary.status = "failed".into();
            summary.error = Some(e.to_string());
            write_json(&dir.join(SUMMARY_FILE), &summary)?;
            Err(e)
        }
    }
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::invalid(
            "experiment",
            format!("config is for {:?}, expected {kind:?}", cfg.experiment),
        ));
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let ms = enumerate_modes(cfg.modes)?;
    let (mut initial, target) = cfg.states(&ms)?;
    if let Some(beam) = &cfg.beam {
        let (state, report) = project_beam(beam, &ms, &cfg.projection)?;
        log::info!(
            "beam projection: norm² {:.6e}, doubled-order discrepancy {:.3e}",
            report.norm_sq,
            report.discrepancy
        );
        let converged = report.discrepancy <= cfg.projection_tol;
        let discrepancy = report.discrepancy;
        summary.projection = Some(report);
        if !converged {
            return Err(Error::QuadratureNotConverged {
                discrepancy,
                tolerance: cfg.projection_tol,
            });
        }
        initial = state;
    }
    summary.initial_energy = energy(&ms, &initial);
    summary.target_energy = energy(&ms, &target);

    let problem = ControlProblem {
        modes: ms.clone(),
        region: cfg.region,
        horizon: cfg.horizon,
        iterations: cfg.iterations,
        initial,
        target,
        tol: cfg.tol,
        samples_per_unit: cfg.samples_per_unit,
    };
    let mut checkpoints: Vec<usize> = cfg.cost_checkpoints.iter().copied().filter(|&n| n <= cfg.iterations).collect();
    checkpoints.push(cfg.iterations);
    checkpoints.sort_unstable();
    checkpoints.dedup();

    log::info!(
        "running {} damped passes, G = {}, T = {}",
        2 * cfg.iterations + 2,
        cfg.modes,
        cfg.horizon
    );
    let (run, partials) = iterate_with_checkpoints(&problem, &checkpoints)?;
    summary.d = run.d.clone();
    summary.d_monotonicity_violation = run.monotonicity_violation(0.0);
    summary.d_ratio = if run.d[0] > 0.0 { *run.d.last().unwrap() / run.d[0] } else { 0.0 };
    summary.energy_accounting_error = run.energy_accounting_error();
    summary.m_bound = run.m_bound;
    summary.m_bound_growing = run.m_bound_growing;
    summary.stats = run.stats;

    let mut error_curve = Table::new(["j", "d_j"]);
    for (i, d) in run.d.iter().enumerate() {
        error_curve.push(vec![i as f64 - 1.0, *d]);
    }
    error_curve.write(dir, "error_curve", cfg.plot_data)?;

    let mass = problem.mass_matrix();
    let mut cost_table = Table::new(["N", "cost", "cost_per_pass", "squared_error"]);
    for (n, control) in &partials {
        let c = cost(control, &mass);
        let point = CostPoint {
            n: *n,
            cost: c,
            normalized: c / (*n as f64 + 1.0),
            predicted_error: 2.0 * run.d_at(2 * *n as isize),
        };
        cost_table.push(vec![*n as f64, point.cost, point.normalized, point.predicted_error]);
        summary.costs.push(point);
    }
    cost_table.write(dir, "cost_vs_n", cfg.plot_data)?;
    let ns: Vec<usize> = summary.costs.iter().map(|p| p.n).collect();
    let errs: Vec<f64> = summary.costs.iter().map(|p| p.predicted_error).collect();
    summary.decay_fit = fit_log_decay(&ns, &errs, DEFAULT_BETA).ok();

    let control = &run.control;
    write_json(
        &dir.join("control_run.json"),
        &ControlRunRecord {
            schema: CONFIG_SCHEMA,
            modes: cfg.modes,
            iterations: run.iterations,
            horizon: run.horizon,
            tol: cfg.tol,
            region: cfg.region,
            d: &run.d,
            dissipated: &run.dissipated,
            seed_norms: &run.seed_norms,
            m_bound: run.m_bound,
            m_bound_growing: run.m_bound_growing,
            predicted_error: run.predicted_error,
            cost: cost(control, &mass),
            seeds: &run.seeds,
            terminals: &run.terminals,
        },
    )?;
    let mut trace = Table::new(std::iter::once("t".to_string()).chain((1..=ms.len()).map(|i| format!("g_{i}"))));
    for (t, g) in control.times().iter().zip(control.values()) {
        let mut row = Vec::with_capacity(g.len() + 1);
        row.push(*t);
        row.extend_from_slice(g);
        trace.push(row);
    }
    trace.write(dir, "control", cfg.plot_data)?;

    // Controlled wave over [0, T]: energy curve and terminal error.
    let states = evolve_forced(&ms, &problem.initial, control, &mass, control.times())?;
    let mut energy_table = Table::new(["t", "energy"]);
    for (t, s) in control.times().iter().zip(&states) {
        energy_table.push(vec![*t, energy(&ms, s)]);
    }
    energy_table.write(dir, "energy", cfg.plot_data)?;
    let check = verify_control(&problem, control, run.predicted_error)?;
    summary.predicted_error = check.predicted_error;
    summary.achieved_error = check.achieved_error;
    summary.error_mismatch = check.mismatch;

    let achieved = states.last().expect("control grid has at least two points");
    field_table(&ms, &problem.target.a, cfg.field_grid).write(dir, "target_field", cfg.plot_data)?;
    field_table(&ms, &achieved.a, cfg.field_grid).write(dir, "achieved_field", cfg.plot_data)?;
    Ok(())
}

/// Projects the beam's `(g₀, g₁)` onto `ms` with `rule` and with its
/// doubled order, returning the finer coefficients.
pub fn project_beam(beam: &BeamParams, ms: &ModeSet, rule: &ProjectionRule) -> Result<(SpectralState, ProjectionReport)> {
    let a = project_with(|x1, x2| beam.displacement(x1, x2), ms, rule)?;
    let b = project_with(|x1, x2| beam.velocity(x1, x2), ms, rule)?;
    let fine = rule.doubled();
    let a2 = project_with(|x1, x2| beam.displacement(x1, x2), ms, &fine)?;
    let b2 = project_with(|x1, x2| beam.velocity(x1, x2), ms, &fine)?;

    let scale = a2.iter().chain(&b2).fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(&a2).chain(b.iter().zip(&b2)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let discrepancy = if scale > 0.0 { diff / scale } else { diff };

    let centre = beam.k_o / std::f64::consts::PI;
    let band = (centre - 40.0, centre + 40.0);
    let mut total = 0.0;
    let mut inside = 0.0;
    for (j, m) in ms.modes().iter().enumerate() {
        let e = m.lambda * a2[j] * a2[j] + b2[j] * b2[j];
        total += e;
        let l = f64::from(m.l);
        if l >= band.0 && l <= band.1 {
            inside += e;
        }
    }
    let report = ProjectionReport {
        rule: *rule,
        discrepancy,
        norm_sq: total,
        band,
        band_fraction: if total > 0.0 { inside / total } else { 0.0 },
        max_l: ms.modes().iter().map(|m| m.l).max().unwrap_or(0),
    };
    Ok((SpectralState { a: a2, b: b2 }, report))
}

/// `(x1, x2, v)` on a uniform `n × n` grid of the closed square, `x2`
/// varying fastest.
pub fn field_table(ms: &ModeSet, coeffs: &[f64], n: usize) -> Table {
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let kmax = ms.modes().iter().map(|m| m.k).max().unwrap_or(0) as usize;
    let lmax = ms.modes().iter().map(|m| m.l).max().unwrap_or(0) as usize;
    let sines = |count: usize| -> Vec<Vec<f64>> {
        xs.iter()
            .map(|x| (0..=count).map(|k| (std::f64::consts::PI * k as f64 * x).sin()).collect())
            .collect()
    };
    let s1 = sines(kmax);
    let s2 = sines(lmax);
    let mut t = Table::new(["x1", "x2", "v"]);
    t.block = n;
    for (i, x1) in xs.iter().enumerate() {
        for (j, x2) in xs.iter().enumerate() {
            let v: f64 = ms
                .modes()
                .iter()
                .zip(coeffs)
                .map(|(m, c)| 2.0 * c * s1[i][m.k as usize] * s2[j][m.l as usize])
                .sum();
            t.push(vec![*x1, *x2, v]);
        }
    }
    t
}
