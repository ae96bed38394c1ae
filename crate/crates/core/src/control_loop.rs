//! Approximate control by iterated time reversal of the damped wave.
//!
//! Starting from the seed
//! `(w⁰, ∂_t w⁰)(0) = (v₀d, -v₁d) - (u, -∂_t u)(T)`, where `u` is the free
//! wave from `(v₀, v₁)`, each pass solves the damped equation on `[0, T]`
//! and seeds the next with `(-w^(j), ∂_t w^(j))(T)`. After `2N + 2` passes
//! the control
//!
//! ```text
//! f_N(x, t) = -1_ω Σ_{ℓ=0..N} [∂_t w^(2ℓ+1)(x, t) + ∂_t w^(2ℓ)(x, T - t)]
//! ```
//!
//! steers `(v₀, v₁)` to the target up to `(w^(2N+1), ∂_t w^(2N+1))(T)`, so
//! the squared `H¹₀ × L²` error is exactly `2E(w^(2N+1), T)`.

use serde::{Deserialize, Serialize};

use crate::damped_dynamics::{solve, DampedSystem, DampedTrajectory};
use crate::error::{Error, Result};
use crate::ode::OdeStats;
use crate::spectral_basis::{omega_mass_matrix, MassMatrix, ModeSet, Region};
use crate::wave_dynamics::{energy, evolve_forced, evolve_free, sobolev_norm, ForcingRecord, SobolevLevel, SpectralState};

/// Default `β` for bound diagnostics. Reporting only; the iteration never
/// uses it.
pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlProblem {
    pub modes: ModeSet,
    pub region: Region,
    pub horizon: f64,
    /// Upper summation index `N` of the control; `2N + 2` damped passes.
    pub iterations: usize,
    pub initial: SpectralState,
    pub target: SpectralState,
    pub tol: f64,
    /// Output samples per unit time of every damped pass; `None` picks the
    /// system default (see [`DampedSystem::default_samples_per_unit`]).
    pub samples_per_unit: Option<f64>,
}

impl ControlProblem {
    pub fn validate(&self) -> Result<()> {
        self.initial.check_len(&self.modes, "initial state")?;
        self.target.check_len(&self.modes, "target state")?;
        if !self.initial.is_finite() || !self.target.is_finite() {
            return Err(Error::invalid("state", "initial and target coefficients must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("T", format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "solver tolerance must be positive"));
        }
        if let Some(s) = self.samples_per_unit {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("samples_per_unit", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn grid_points(&self, sys: &DampedSystem) -> usize {
        let density = self.samples_per_unit.unwrap_or_else(|| sys.default_samples_per_unit());
        ((self.horizon * density).ceil() as usize).max(1) + 1
    }

    pub fn mass_matrix(&self) -> MassMatrix {
        omega_mass_matrix(&self.modes, self.region)
    }
}

/// `(v₀d - u(T), -v₁d + ∂_t u(T))` with `u` the free wave from `(v₀, v₁)`.
pub fn seed_zero(problem: &ControlProblem) -> Result<SpectralState> {
    problem.validate()?;
    let free = evolve_free(&problem.modes, &problem.initial, problem.horizon);
    Ok(SpectralState {
        a: problem.target.a.iter().zip(&free.a).map(|(d, u)| d - u).collect(),
        b: problem.target.b.iter().zip(&free.b).map(|(d, u)| -d + u).collect(),
    })
}

/// Record of one time-reversal construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlRun {
    pub iterations: usize,
    pub horizon: f64,
    /// `(w^(j), ∂_t w^(j))(0)` for `j = 0..=2N+1`.
    pub seeds: Vec<SpectralState>,
    /// `(w^(j), ∂_t w^(j))(T)` for `j = 0..=2N+1`.
    pub terminals: Vec<SpectralState>,
    /// `d[i] = d_{i-1} = E(w^(i), T)` for `i = 0..=2N+1`.
    pub d: Vec<f64>,
    /// `∫_0^T ∫_ω |∂_t w^(j)|²` per pass.
    pub dissipated: Vec<f64>,
    /// Spectral `H² × H¹` surrogate `Σ (λ²a² + λb²)` of each seed.
    pub seed_norms: Vec<f64>,
    /// `sup_j` of `seed_norms`.
    pub m_bound: f64,
    /// Set when the surrogate norm peaks at the last seed above its initial
    /// value, i.e. boundedness of `M` is not evident from the run.
    pub m_bound_growing: bool,
    /// Spectral density `g` of the control `-1_ω Σ g_i e_i` on the pass grid.
    pub control: ForcingRecord,
    /// `2E(w^(2N+1), T)`.
    pub predicted_error: f64,
    pub stats: OdeStats,
}

impl ControlRun {
    /// `d_j` for `j = -1..=2N`.
    pub fn d_at(&self, j: isize) -> f64 {
        self.d[(j + 1) as usize]
    }

    /// Largest `d_j - d_{j-1}(1 + slack)` over the sequence, clamped at 0.
    pub fn monotonicity_violation(&self, slack: f64) -> f64 {
        self.d
            .windows(2)
            .map(|w| (w[1] - w[0] * (1.0 + slack)).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `max_j |(d_{j-1} - d_j) - dissipated_j| / d_{-1}` over passes after the
    /// first, i.e. the energy identity applied to every pass.
    pub fn energy_accounting_error(&self) -> f64 {
        let scale = self.d[0].max(f64::MIN_POSITIVE);
        (1..self.d.len())
            .map(|j| ((self.d[j - 1] - self.d[j]) - self.dissipated[j]).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Streaming assembly of the control density from successive passes.
struct ControlAssembler {
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl ControlAssembler {
    fn new(points: usize, dim: usize) -> Self {
        Self {
            values: vec![vec![0.0; dim]; points],
            slopes: vec![vec![0.0; dim]; points],
        }
    }

    /// Adds `∂_t w^(j)(t)` for odd `j`, `∂_t w^(j)(T - t)` for even `j`.
    fn add_pass(&mut self, j: usize, traj: &DampedTrajectory) {
        let n = self.values.len();
        let states = traj.states();
        let acc = traj.accelerations();
        for i in 0..n {
            let (src, sign) = if j % 2 == 1 { (i, 1.0) } else { (n - 1 - i, -1.0) };
            for (v, b) in self.values[i].iter_mut().zip(&states[src].b) {
                *v += b;
            }
            for (s, d) in self.slopes[i].iter_mut().zip(&acc[src]) {
                *s += sign * d;
            }
        }
    }

    fn record(&self, times: &[f64], region: Region) -> Result<ForcingRecord> {
        ForcingRecord::with_slopes(times.to_vec(), self.values.clone(), self.slopes.clone(), region)
    }
}

/// Control density from a complete list of passes `j = 0..=2N+1`, all on
/// the same uniform grid.
pub fn assemble_control(passes: &[DampedTrajectory], region: Region) -> Result<ForcingRecord> {
    if passes.is_empty() || !passes.len().is_multiple_of(2) {
        return Err(Error::invalid("passes", "need 2N + 2 passes"));
    }
    let times = passes[0].times();
    let dim = passes[0].initial().len();
    if passes.iter().any(|p| p.times() != times) {
        return Err(Error::invalid("passes", "all passes must share one time grid"));
    }
    let mut acc = ControlAssembler::new(times.len(), dim);
    for (j, p) in passes.iter().enumerate() {
        acc.add_pass(j, p);
    }
    acc.record(times, region)
}

pub fn iterate(problem: &ControlProblem) -> Result<ControlRun> {
    iterate_with_checkpoints(problem, &[]).map(|(run, _)| run)
}

/// Runs the construction and additionally returns the partial controls
/// `f_n` for every `n` in `checkpoints` (each `n <= N`). The recursion does
/// not depend on `N`, so `f_n` and `d_{2n}` of a longer run are exactly
/// those of a run with `N = n`.
pub fn iterate_with_checkpoints(
    problem: &ControlProblem,
    checkpoints: &[usize],
) -> Result<(ControlRun, Vec<(usize, ForcingRecord)>)> {
    problem.validate()?;
    if let Some(&n) = checkpoints.iter().find(|&&n| n > problem.iterations) {
        return Err(Error::invalid("checkpoints", format!("checkpoint {n} exceeds N = {}", problem.iterations)));
    }
    let ms = &problem.modes;
    let sys = DampedSystem::assemble(ms, problem.region);
    let points = problem.grid_points(&sys);
    let passes = 2 * problem.iterations + 2;

    let mut seed = seed_zero(problem)?;
    let mut seeds = Vec::with_capacity(passes);
    let mut terminals = Vec::with_capacity(passes);
    let mut d = Vec::with_capacity(passes);
    let mut dissipated = Vec::with_capacity(passes);
    let mut seed_norms = Vec::with_capacity(passes);
    let mut stats = OdeStats::default();
    let mut assembler = ControlAssembler::new(points, ms.len());
    let mut snapshots = Vec::new();
    let mut times = Vec::new();

    for j in 0..passes {
        let traj = solve(&sys, &seed, problem.horizon, points, problem.tol)?;
        stats.accepted += traj.stats.accepted;
        stats.rejected += traj.stats.rejected;
        stats.rhs_evals += traj.stats.rhs_evals;
        stats.max_error_ratio = stats.max_error_ratio.max(traj.stats.max_error_ratio);

        assembler.add_pass(j, &traj);
        let terminal = traj.terminal().clone();
        seed_norms.push(sobolev_norm(ms, &seed, SobolevLevel::H2H1).powi(2));
        dissipated.push(traj.dissipated(sys.damping(), 0.0, problem.horizon)?);
        d.push(energy(ms, &terminal));
        if times.is_empty() {
            times = traj.times().to_vec();
        }
        if j % 2 == 1 {
            let n = j / 2;
            if checkpoints.contains(&n) {
                snapshots.push((n, assembler.record(&times, problem.region)?));
            }
        }
        seeds.push(std::mem::replace(
            &mut seed,
            SpectralState {
                a: terminal.a.iter().map(|v| -v).collect(),
                b: terminal.b.clone(),
            },
        ));
        terminals.push(terminal);
    }

    let m_bound = seed_norms.iter().copied().fold(0.0, f64::max);
    let last = *seed_norms.last().unwrap();
    let m_bound_growing = last == m_bound && last > seed_norms[0] * (1.0 + 1e-6);
    if m_bound_growing {
        log::warn!("seed H2xH1 surrogate norm is still growing at the last pass ({last:e})");
    }
    let predicted_error = 2.0 * *d.last().unwrap();
    let run = ControlRun {
        iterations: problem.iterations,
        horizon: problem.horizon,
        seeds,
        terminals,
        d,
        dissipated,
        seed_norms,
        m_bound,
        m_bound_growing,
        control: assembler.record(&times, problem.region)?,
        predicted_error,
        stats,
    };
    Ok((run, snapshots))
}

/// Outcome of simulating the controlled wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// `‖(v(T) - v₀d, ∂_t v(T) - v₁d)‖²_{H¹₀×L²}` from the forced simulation.
    pub achieved_error: f64,
    /// `2E(w^(2N+1), T)`.
    pub predicted_error: f64,
    /// `|achieved - predicted| / max(achieved, predicted)`; zero if both vanish.
    pub mismatch: f64,
}

/// Terminal state of the wave driven from `(v₀, v₁)` by `control`.
pub fn controlled_terminal(problem: &ControlProblem, control: &ForcingRecord) -> Result<SpectralState> {
    let mass = problem.mass_matrix();
    let mut out = evolve_forced(&problem.modes, &problem.initial, control, &mass, &[problem.horizon])?;
    Ok(out.remove(0))
}

pub fn squared_distance(ms: &ModeSet, x: &SpectralState, y: &SpectralState) -> f64 {
    2.0 * energy(ms, &x.subtracted(y))
}

pub fn verify_controlled(problem: &ControlProblem, run: &ControlRun) -> Result<Verification> {
    verify_control(problem, &run.control, run.predicted_error)
}

/// Verification of a partial control `f_n` against its prediction `2d_{2n}`.
pub fn verify_control(problem: &ControlProblem, control: &ForcingRecord, predicted_error: f64) -> Result<Verification> {
    let terminal = controlled_terminal(problem, control)?;
    let achieved_error = squared_distance(&problem.modes, &terminal, &problem.target);
    let scale = achieved_error.max(predicted_error);
    let mismatch = if scale == 0.0 {
        0.0
    } else {
        (achieved_error - predicted_error).abs() / scale
    };
    Ok(Verification {
        achieved_error,
        predicted_error,
        mismatch,
    })
}

/// `max_t ‖1_ω Σ g_i(t) e_i‖_{L²}` over the control grid.
pub fn cost(control: &ForcingRecord, mass: &MassMatrix) -> f64 {
    control
        .values()
        .iter()
        .map(|g| mass.quadratic_form(g).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

/// Per-sample `L²(Ω)` norm of the masked control.
pub fn control_norms(control: &ForcingRecord, mass: &MassMatrix) -> Vec<f64> {
    control
        .values()
        .iter()
        .map(|g| mass.quadratic_form(g).max(0.0).sqrt())
        .collect()
}

/// Least-squares fit `e_n ≈ C [ln(1 + 2n)]^{-2β}` over `n > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDecayFit {
    pub constant: f64,
    /// `‖e - C x‖ / ‖e‖`.
    pub relative_residual: f64,
    pub samples: usize,
}

/// Fits the squared-error bound of the construction to measured errors
/// `errors[i]` at `ns[i]`; `n = 0` is skipped since `ln 1 = 0`.
pub fn fit_log_decay(ns: &[usize], errors: &[f64], beta: f64) -> Result<LogDecayFit> {
    if ns.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            context: "decay fit",
            expected: ns.len(),
            found: errors.len(),
        });
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &e)| ((1.0 + 2.0 * n as f64).ln().powf(-2.0 * beta), e))
        .collect();
    if pts.is_empty() {
        return Err(Error::invalid("ns", "need at least one positive iteration count"));
    }
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let constant = sxy / sxx;
    let res: f64 = pts.iter().map(|(x, y)| (y - constant * x).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = pts.iter().map(|(_, y)| y * y).sum::<f64>().sqrt();
    Ok(LogDecayFit {
        constant,
        relative_residual: if norm > 0.0 { res / norm } else { 0.0 },
        samples: pts.len(),
    })
}

/// Iteration count suggested by the logarithmic error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuggestedIterations {
    Count(u64),
    /// `(e^x - 1)/2` does not fit in a `u64`.
    Saturated,
}

/// `ceil((exp((sqrt(C·M)/ε)^{1/β}) - 1) / 2)`.
pub fn suggest_iterations(epsilon: f64, m_bound: f64, beta: f64, constant: f64) -> Result<SuggestedIterations> {
    if !(epsilon > 0.0 && m_bound > 0.0 && constant > 0.0) {
        return Err(Error::invalid("suggest_N", "epsilon, M and C must be positive"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", format!("beta must lie in (0, 1), got {beta}")));
    }
    let exponent = ((constant * m_bound).sqrt() / epsilon).powf(1.0 / beta);
    // (e^x - 1)/2 must stay below u64::MAX ≈ 2^64.
    if exponent >= 64.0 * std::f64::consts::LN_2 + std::f64::consts::LN_2 - 1e-9 {
        log::warn!("suggested iteration count saturates (exponent {exponent:e})");
        return Ok(SuggestedIterations::Saturated);
    }
    let n = (exponent.exp_m1() / 2.0).ceil();
    if n >= u64::MAX as f64 {
        return Ok(SuggestedIterations::Saturated);
    }
    Ok(SuggestedIterations::Count(n as u64))
}
