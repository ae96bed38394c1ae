use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, CONFIG_SCHEMA};
use super::export::{write_json, Table};
use crate::control_loop::{iterate, verify_controlled, ControlProblem};
use crate::damped_dynamics::{dissipation_residual, solve, DampedSystem};
use crate::error::Result;
use crate::frequency_function::{
    cauchy_schwarz_check, log_derivative_check, monotonicity_check, profile, random_dirichlet_polynomial,
    random_interior_polynomial, three_ball_check, Geometry, HarmonicPolynomial, HarmonicSample, QuadSpec,
    THREE_BALL_TOL,
};
use crate::quadrature::GaussLegendre;
use crate::spectral_basis::{enumerate_modes, eval_mode, omega_mass_matrix, MassMatrix, ModeSet, Region};
use crate::wave_dynamics::{energy, evolve_free, SpectralState};

/// Tolerance the fixed check limits are calibrated for.
const REFERENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, measured: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= limit,
            measured,
            limit,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub seed: u64,
    pub tol: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(cfg_seed: u64, tol: f64, checks: Vec<Check>) -> Self {
        Self {
            schema: CONFIG_SCHEMA.to_string(),
            seed: cfg_seed,
            tol,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Harness hooks for exercising failure paths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FaultInjection {
    /// Perturb one off-diagonal entry of the closed-form mass matrix.
    pub corrupt_mass_matrix: bool,
}

/// Runs every module invariant suite with the seed and solver tolerance of
/// `cfg`. Limits that depend on the solver tolerance scale with
/// `max(1, tol / 1e-9)`.
pub fn run_property_suites(cfg: &ExperimentConfig, faults: FaultInjection) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = (cfg.tol / REFERENCE_TOL).max(1.0);
    let mut checks = Vec::new();

    checks.push(free_energy_conservation(cfg.modes.min(100), &mut rng)?);
    checks.push(mass_matrix_oracle(cfg.region, faults)?);
    checks.extend(dissipation_checks(cfg.modes.min(100), cfg.region, cfg.tol, scale, &mut rng)?);
    checks.extend(telescoping_checks(cfg.region, cfg.tol, scale)?);
    checks.extend(frequency_checks(&mut rng)?);
    Ok(SuiteReport::new(cfg.seed, cfg.tol, checks))
}

/// Random state with coefficients decaying like `λ^{-1}` (displacement) and
/// `λ^{-1/2}` (velocity), so the energy is dominated by low modes.
pub fn random_smooth_state(ms: &ModeSet, rng: &mut impl Rng) -> SpectralState {
    let a = ms.modes().iter().map(|m| rng.gen_range(-1.0..1.0) / m.lambda).collect();
    let b = ms.modes().iter().map(|m| rng.gen_range(-1.0..1.0) / m.lambda.sqrt()).collect();
    SpectralState { a, b }
}

fn free_energy_conservation(g: usize, rng: &mut impl Rng) -> Result<Check> {
    let ms = enumerate_modes(g)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s0 = SpectralState {
            a: (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            b: (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let e0 = energy(&ms, &s0);
        for i in 1..=100 {
            let e = energy(&ms, &evolve_free(&ms, &s0, 0.1 * i as f64));
            worst = worst.max((e - e0).abs() / e0);
        }
    }
    Ok(Check::new(
        "free-energy-conservation",
        worst,
        1e-12,
        format!("G = {g}, 100 random states, t in (0, 10]"),
    ))
}

/// `∫_ω e_i e_j` by tensor Gauss–Legendre over the region.
pub fn quadrature_mass_matrix(ms: &ModeSet, region: Region, nodes: usize) -> Vec<f64> {
    let (lo, hi) = region.x1_bounds();
    let rule = GaussLegendre::new(nodes);
    let pts: Vec<(f64, f64, f64)> = rule
        .on_interval(lo, hi)
        .flat_map(|(x1, w1)| rule.on_interval(0.0, 1.0).map(move |(x2, w2)| (x1, x2, w1 * w2)))
        .collect();
    let g = ms.len();
    let vals: Vec<Vec<f64>> = ms
        .modes()
        .iter()
        .map(|m| pts.iter().map(|&(x1, x2, _)| eval_mode(m, x1, x2)).collect())
        .collect();
    let mut out = vec![0.0; g * g];
    for i in 0..g {
        for j in i..g {
            let s: f64 = pts.iter().enumerate().map(|(p, &(_, _, w))| w * vals[i][p] * vals[j][p]).sum();
            out[i * g + j] = s;
            out[j * g + i] = s;
        }
    }
    out
}

fn mass_matrix_oracle(region: Region, faults: FaultInjection) -> Result<Check> {
    let g = 50;
    let ms = enumerate_modes(g)?;
    let mut closed = omega_mass_matrix(&ms, region);
    if faults.corrupt_mass_matrix {
        let mut e = closed.entries().to_vec();
        e[1] += 1e-6;
        e[g] += 1e-6;
        closed = MassMatrix::from_entries(g, e, region)?;
    }
    let oracle = quadrature_mass_matrix(&ms, region, 64);
    let err = closed
        .entries()
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Check::new(
        "mass-matrix-oracle",
        err,
        1e-10,
        format!("G = {g}, 64x64 Gauss-Legendre over the region"),
    ))
}

fn dissipation_checks(g: usize, region: Region, tol: f64, scale: f64, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let ms = enumerate_modes(g)?;
    let sys = DampedSystem::assemble(&ms, region);
    let s0 = random_smooth_state(&ms, rng);
    let e0 = energy(&ms, &s0);
    let horizon = 4.0;
    let traj = solve(&sys, &s0, horizon, sys.default_grid_points(horizon), tol)?;
    let residual = dissipation_residual(&traj, &sys, 0.0, horizon)?;
    let energies = traj.energies(&ms);
    let rise = energies.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
    Ok(vec![
        Check::new(
            "dissipation-identity",
            residual.abs() / e0,
            1e-6 * scale,
            format!("G = {g}, T = {horizon}, tol = {tol:e}; limit 1e-6 x {scale:e}"),
        ),
        Check::new(
            "damped-energy-nonincreasing",
            rise / e0,
            1e-7 * scale,
            "largest relative energy increase between grid samples",
        ),
    ])
}

fn telescoping_checks(region: Region, tol: f64, scale: f64) -> Result<Vec<Check>> {
    let g = 25;
    let ms = enumerate_modes(g)?;
    let mut target = SpectralState::zeros(g);
    target.a[0] = 1.0;
    target.a[1] = 1.0;
    target.b[0] = 1.0;
    let problem = ControlProblem {
        modes: ms,
        region,
        horizon: 4.0,
        iterations: 5,
        initial: SpectralState::zeros(g),
        target,
        tol,
        samples_per_unit: None,
    };
    let run = iterate(&problem)?;
    let check = verify_controlled(&problem, &run)?;
    Ok(vec![
        Check::new(
            "telescoping-error-identity",
            check.mismatch,
            1e-5 * scale,
            format!(
                "G = {g}, N = 5: achieved {:.6e} vs predicted {:.6e}",
                check.achieved_error, check.predicted_error
            ),
        ),
        Check::new(
            "error-sequence-monotone",
            run.monotonicity_violation(0.0) / run.d[0],
            1e-7 * scale,
            "largest relative increase of d_j",
        ),
        Check::new(
            "pass-energy-accounting",
            run.energy_accounting_error(),
            1e-6 * scale,
            "d_(j-1) - d_j against the energy dissipated in pass j",
        ),
    ])
}

fn unit_ball() -> Geometry {
    Geometry::InteriorBall {
        center: [0.0, 0.0],
        outer_radius: 1.0,
    }
}

/// Frequency-function suite: homogeneous anchors, monotonicity, the
/// logarithmic derivative, three-ball inequalities and the Cauchy–Schwarz
/// step.
pub fn frequency_checks(rng: &mut impl Rng) -> Result<Vec<Check>> {
    let quad = QuadSpec::default();
    let radii: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64).collect();
    let mut checks = Vec::new();

    let mut worst_phi: f64 = 0.0;
    let mut worst_log: f64 = 0.0;
    let mut worst_equal: f64 = 0.0;
    for m in 1..=6u32 {
        let s = HarmonicSample::new(HarmonicPolynomial::new([0.0, 0.0]).with_real(m, 1.0), unit_ball())?;
        let p = profile(&s, &radii, quad)?;
        for phi in &p.phi {
            worst_phi = worst_phi.max((phi - 2.0 * f64::from(m)).abs());
        }
        let t = three_ball_check(&s, 0.1, 0.35, 0.9, quad)?;
        worst_equal = worst_equal.max((t.lhs / t.rhs - 1.0).abs());
        let wide = HarmonicSample::new(
            HarmonicPolynomial::new([0.0, 0.0]).with_real(m, 1.0),
            Geometry::InteriorBall {
                center: [0.0, 0.0],
                outer_radius: 4.0,
            },
        )?;
        worst_log = worst_log.max(log_derivative_check(&wide, 2.5, quad, 1e-3)?);
    }
    checks.push(Check::new(
        "frequency-homogeneous",
        worst_phi,
        1e-8,
        "|Phi - 2m| for Re(z^m), m = 1..6, 19 radii",
    ));
    checks.push(Check::new(
        "log-derivative",
        worst_log,
        1e-6,
        "Re(z^m), m = 1..6, r = 2.5, dr = 1e-3",
    ));

    let mut worst_mono: f64 = 0.0;
    let mut worst_cs: f64 = 0.0;
    for _ in 0..50 {
        let s = HarmonicSample::new(random_interior_polynomial(rng), unit_ball())?;
        let p = profile(&s, &radii, quad)?;
        worst_mono = worst_mono.max(monotonicity_check(&p));
        let (d2, bound) = cauchy_schwarz_check(&s, 0.7, quad)?;
        worst_cs = worst_cs.max((d2 - bound) / bound);
    }
    checks.push(Check::new(
        "frequency-monotone",
        worst_mono,
        1e-8,
        "50 random harmonic polynomials, degree <= 6",
    ));
    checks.push(Check::new(
        "cauchy-schwarz-step",
        worst_cs.max(0.0),
        1e-12,
        "(D^2 - 4 I H) / (4 I H) at r = 0.7",
    ));

    let mut worst_interior: f64 = f64::NEG_INFINITY;
    for _ in 0..100 {
        let s = HarmonicSample::new(random_interior_polynomial(rng), unit_ball())?;
        let (r1, r2, r3) = random_radii(rng, 0.0, 1.0);
        let t = three_ball_check(&s, r1, r2, r3, quad)?;
        worst_interior = worst_interior.max(t.lhs / t.rhs - 1.0);
    }
    checks.push(Check::new(
        "three-ball-interior",
        worst_interior.max(0.0),
        THREE_BALL_TOL,
        "100 random interior cases; measured = max(lhs/rhs - 1, 0)",
    ));

    let mut worst_half: f64 = f64::NEG_INFINITY;
    for i in 0..50 {
        let poly = random_dirichlet_polynomial(rng);
        let h = if i % 2 == 0 { 0.0 } else { rng.gen_range(0.2..0.5) };
        let geometry = Geometry::HalfDisk {
            center: [poly.center[0] + rng.gen_range(-0.2..0.2), h],
            outer_radius: 1.0,
            disk_radius: 2.0,
        };
        let s = HarmonicSample::new(poly, geometry)?;
        let (r1, r2, r3) = random_radii(rng, 0.0, 1.0);
        let r1 = if h > 0.0 { r1.min(0.9 * h) } else { r1 };
        let t = three_ball_check(&s, r1, r2, r3, quad)?;
        worst_half = worst_half.max(t.lhs / t.rhs - 1.0);
    }
    for m in 1..=6u32 {
        let s = HarmonicSample::new(
            HarmonicPolynomial::new([0.0, 0.0]).with_imag(m, 1.0),
            Geometry::HalfDisk {
                center: [0.0, 0.0],
                outer_radius: 1.0,
                disk_radius: 1.0,
            },
        )?;
        let t = three_ball_check(&s, 0.15, 0.4, 0.85, quad)?;
        worst_equal = worst_equal.max((t.lhs / t.rhs - 1.0).abs());
    }
    checks.push(Check::new(
        "three-ball-half-disk",
        worst_half.max(0.0),
        THREE_BALL_TOL,
        "50 random half-disk cases; measured = max(lhs/rhs - 1, 0)",
    ));
    checks.push(Check::new(
        "three-ball-homogeneous-equality",
        worst_equal,
        1e-8,
        "|lhs/rhs - 1| for Re(z^m) on balls and Im(z^m) on half-balls",
    ));
    Ok(checks)
}

/// `lo < r1 < r2 < r3 < hi` with gaps of at least 5% of the range.
fn random_radii(rng: &mut impl Rng, lo: f64, hi: f64) -> (f64, f64, f64) {
    let span = hi - lo;
    let gap = 0.05 * span;
    let r1 = lo + rng.gen_range(gap..0.3 * span);
    let r2 = rng.gen_range(r1 + gap..lo + 0.65 * span);
    let r3 = rng.gen_range(r2 + gap..hi - gap);
    (r1, r2, r3)
}

/// Runs the frequency suite and writes `(r, H, D, Phi)` profiles for the
/// homogeneous anchors and one random combination, plus the report.
pub fn run_frequency_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    let radii: Vec<f64> = (1..=95).map(|i| 0.01 * i as f64).collect();
    let quad = QuadSpec::default();
    for m in 1..=6u32 {
        let s = HarmonicSample::new(HarmonicPolynomial::new([0.0, 0.0]).with_real(m, 1.0), unit_ball())?;
        write_profile(dir, &format!("profile_re_z{m}"), &profile(&s, &radii, quad)?, cfg.plot_data)?;
    }
    let mixed = HarmonicPolynomial::new([0.0, 0.0]).with_real(1, 1.0).with_real(3, 0.1);
    let s = HarmonicSample::new(mixed, unit_ball())?;
    write_profile(dir, "profile_mixed", &profile(&s, &radii, quad)?, cfg.plot_data)?;
    let s = HarmonicSample::new(random_interior_polynomial(&mut rng), unit_ball())?;
    write_profile(dir, "profile_random", &profile(&s, &radii, quad)?, cfg.plot_data)?;

    let report = SuiteReport::new(cfg.seed, cfg.tol, frequency_checks(&mut rng)?);
    write_json(&dir.join("freq_report.json"), &report)?;
    Ok(report)
}

fn write_profile(dir: &Path, stem: &str, p: &crate::frequency_function::RadialProfile, plot: bool) -> Result<()> {
    let mut t = Table::new(["r", "H", "D", "Phi"]);
    for i in 0..p.radii.len() {
        t.push(vec![p.radii[i], p.h[i], p.d[i], p.phi[i]]);
    }
    t.write(dir, stem, plot)
}
