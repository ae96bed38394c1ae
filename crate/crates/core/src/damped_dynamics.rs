//! Galerkin solution of the locally damped wave equation
//! `w'' - Δw + 1_ω w' = 0`, its energy bookkeeping, and the computable
//! quantities appearing in the decay/observation equivalence.
//!
//! In the eigenbasis the system reads `a'' + Λa + B a' = 0`, with `Λ` the
//! diagonal of eigenvalues and `B` the ω-mass matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{hermite_eval, hermite_weights};
use crate::ode::{dopri5, OdeStats};
use crate::quadrature::GaussLegendre;
use crate::spectral_basis::{omega_mass_matrix, MassMatrix, ModeSet, Region};
use crate::wave_dynamics::{energy, SpectralState};

/// Default relative/absolute integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Lower bound on output samples per unit time.
pub const MIN_SAMPLES_PER_UNIT: f64 = 40.0;

/// Output samples per radian of the fastest mode.
const SAMPLES_PER_RADIAN: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct DampedSystem {
    modes: ModeSet,
    damping: MassMatrix,
    lambdas: Vec<f64>,
}

impl DampedSystem {
    /// `B = ∫_ω e_i e_j` on the given region.
    pub fn assemble(ms: &ModeSet, region: Region) -> Self {
        Self {
            modes: ms.clone(),
            damping: omega_mass_matrix(ms, region),
            lambdas: ms.lambdas(),
        }
    }

    /// System with an explicit damping matrix (undamped limits, fault
    /// injection).
    pub fn with_damping(ms: &ModeSet, damping: MassMatrix) -> Result<Self> {
        if damping.size() != ms.len() {
            return Err(Error::DimensionMismatch {
                context: "damping matrix",
                expected: ms.len(),
                found: damping.size(),
            });
        }
        Ok(Self {
            modes: ms.clone(),
            damping,
            lambdas: ms.lambdas(),
        })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn damping(&self) -> &MassMatrix {
        &self.damping
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Acceleration `-Λa - Bb`.
    pub fn acceleration(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        self.damping.apply(b, out);
        for ((o, l), x) in out.iter_mut().zip(&self.lambdas).zip(a) {
            *o = -l * x - *o;
        }
    }

    /// Uniform output density that keeps cubic Hermite interpolation of the
    /// fastest mode accurate: `max(40, 10·sqrt(λ_max))` samples per unit
    /// time.
    pub fn default_samples_per_unit(&self) -> f64 {
        MIN_SAMPLES_PER_UNIT.max(SAMPLES_PER_RADIAN * self.modes.max_frequency())
    }

    /// Number of uniform grid points (both ends included) on `[0, horizon]`.
    pub fn default_grid_points(&self, horizon: f64) -> usize {
        (horizon * self.default_samples_per_unit()).ceil() as usize + 1
    }
}

/// Time-sampled damped solution on a uniform grid, with accelerations for
/// cubic Hermite dense output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampedTrajectory {
    times: Vec<f64>,
    states: Vec<SpectralState>,
    accelerations: Vec<Vec<f64>>,
    pub stats: OdeStats,
    pub tol: f64,
}

impl DampedTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralState] {
        &self.states
    }

    pub fn accelerations(&self) -> &[Vec<f64>] {
        &self.accelerations
    }

    pub fn initial(&self) -> &SpectralState {
        &self.states[0]
    }

    pub fn terminal(&self) -> &SpectralState {
        self.states.last().expect("trajectory has at least two samples")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn energies(&self, ms: &ModeSet) -> Vec<f64> {
        self.states.iter().map(|s| energy(ms, s)).collect()
    }

    fn cell_of(&self, t: f64) -> usize {
        let n = self.times.len();
        match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    fn state_in_cell(&self, cell: usize, t: f64) -> SpectralState {
        let (t0, t1) = (self.times[cell], self.times[cell + 1]);
        let h = t1 - t0;
        let w = hermite_weights((t - t0) / h, h);
        let (s0, s1) = (&self.states[cell], &self.states[cell + 1]);
        let g = s0.len();
        let mut out = SpectralState::zeros(g);
        hermite_eval(&w, &s0.a, &s0.b, &s1.a, &s1.b, &mut out.a);
        hermite_eval(
            &w,
            &s0.b,
            &self.accelerations[cell],
            &s1.b,
            &self.accelerations[cell + 1],
            &mut out.b,
        );
        out
    }

    /// Dense output: grid values are returned exactly, other times by cubic
    /// Hermite interpolation.
    pub fn state_at(&self, t: f64) -> Result<SpectralState> {
        let (start, end) = (self.times[0], self.horizon());
        if !(t >= start && t <= end) {
            return Err(Error::OutsideSpan { t, start, end });
        }
        if let Ok(i) = self.times.binary_search_by(|x| x.total_cmp(&t)) {
            return Ok(self.states[i].clone());
        }
        Ok(self.state_in_cell(self.cell_of(t), t))
    }

    /// `∫_{t0}^{t1} bᵀ B b dt` by Gauss–Legendre on the dense output.
    pub fn dissipated(&self, damping: &MassMatrix, t0: f64, t1: f64) -> Result<f64> {
        let (start, end) = (self.times[0], self.horizon());
        for t in [t0, t1] {
            if !(t >= start && t <= end) {
                return Err(Error::OutsideSpan { t, start, end });
            }
        }
        if t1 <= t0 {
            return Ok(0.0);
        }
        let rule = GaussLegendre::new(8);
        let mut total = 0.0;
        let mut cell = self.cell_of(t0);
        let mut lo = t0;
        while lo < t1 {
            let hi = self.times[cell + 1].min(t1);
            for (t, w) in rule.on_interval(lo, hi) {
                let s = self.state_in_cell(cell, t);
                total += w * damping.quadratic_form(&s.b);
            }
            lo = hi;
            cell += 1;
            if cell + 1 >= self.times.len() {
                break;
            }
        }
        Ok(total)
    }
}

/// Integrates the damped Galerkin system from `s0` over `[0, horizon]`,
/// sampling `grid_points` uniform times (both ends included).
pub fn solve(
    sys: &DampedSystem,
    s0: &SpectralState,
    horizon: f64,
    grid_points: usize,
    tol: f64,
) -> Result<DampedTrajectory> {
    s0.check_len(&sys.modes, "damped solve initial state")?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("T", format!("horizon must be positive, got {horizon}")));
    }
    if grid_points < 2 {
        return Err(Error::invalid("out_grid", "need at least two output points"));
    }
    let g = sys.len();
    let cells = grid_points - 1;
    let times: Vec<f64> = (0..grid_points)
        .map(|i| if i == cells { horizon } else { horizon * i as f64 / cells as f64 })
        .collect();

    let mut y0 = Vec::with_capacity(2 * g);
    y0.extend_from_slice(&s0.a);
    y0.extend_from_slice(&s0.b);
    let out = dopri5(
        |y, dy| {
            let (a, b) = y.split_at(g);
            let (da, db) = dy.split_at_mut(g);
            da.copy_from_slice(b);
            sys.acceleration(a, b, db);
        },
        &y0,
        &times,
        tol,
    )?;

    let states = out
        .states
        .iter()
        .map(|y| SpectralState {
            a: y[..g].to_vec(),
            b: y[g..].to_vec(),
        })
        .collect();
    let accelerations = out.derivatives.iter().map(|d| d[g..].to_vec()).collect();
    Ok(DampedTrajectory {
        times,
        states,
        accelerations,
        stats: out.stats,
        tol,
    })
}

/// `E(t1) - E(t0) + ∫_{t0}^{t1} ∫_ω |∂_t w|²`, zero for the exact solution.
pub fn dissipation_residual(traj: &DampedTrajectory, sys: &DampedSystem, t0: f64, t1: f64) -> Result<f64> {
    if t1 < t0 {
        return Err(Error::invalid("window", format!("need t0 <= t1, got [{t0}, {t1}]")));
    }
    let e0 = energy(&sys.modes, &traj.state_at(t0)?);
    let e1 = energy(&sys.modes, &traj.state_at(t1)?);
    Ok(e1 - e0 + traj.dissipated(&sys.damping, t0, t1)?)
}

/// Energy of `∂_t w` at time zero:
/// `½(Σ λ b² + ‖-Λa - Bb‖²)`, the second term being the initial
/// acceleration.
pub fn higher_energy_at_zero(sys: &DampedSystem, s0: &SpectralState) -> Result<f64> {
    s0.check_len(&sys.modes, "higher energy")?;
    let mut acc = vec![0.0; sys.len()];
    sys.acceleration(&s0.a, &s0.b, &mut acc);
    let grad: f64 = sys.lambdas.iter().zip(&s0.b).map(|(l, b)| l * b * b).sum();
    let accel: f64 = acc.iter().map(|v| v * v).sum();
    Ok(0.5 * (grad + accel))
}

/// Least-squares power-law fit `E ≈ c t^{-δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub delta: f64,
    pub log_constant: f64,
    /// RMS residual of `ln E` about the fitted line.
    pub residual: f64,
    pub samples: usize,
}

impl DecayFit {
    /// Whether the trace is consistent with a power law to within `tol` in
    /// `ln E`.
    pub fn is_power_law(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Fits `ln E` against `ln t` over samples with `t > 0`.
pub fn fit_power_law(times: &[f64], energies: &[f64]) -> Result<DecayFit> {
    if times.len() != energies.len() {
        return Err(Error::DimensionMismatch {
            context: "decay fit",
            expected: times.len(),
            found: energies.len(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in times.iter().zip(energies) {
        if t <= 0.0 {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::invalid("window", format!("energy {e} at t = {t} is not positive")));
        }
        xs.push(t.ln());
        ys.push(e.ln());
    }
    if xs.len() < 2 {
        return Err(Error::invalid("window", "need at least two samples with t > 0"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("window", "degenerate time window"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        delta: -slope,
        log_constant: intercept,
        residual,
        samples: xs.len(),
    })
}

/// Power-law fit of the trajectory energy over grid points in `window`.
pub fn decay_fit(traj: &DampedTrajectory, ms: &ModeSet, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo < hi) || lo < traj.times[0] || hi > traj.horizon() {
        return Err(Error::invalid(
            "window",
            format!("[{lo}, {hi}] must be a proper sub-interval of [0, {}]", traj.horizon()),
        ));
    }
    let (ts, es): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(&t, s)| (t, energy(ms, s)))
        .unzip();
    fit_power_law(&ts, &es)
}

/// Both sides of the observation inequality tied to polynomial decay, for
/// user-supplied constants `C` and `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    /// `C (E(∂_t w, 0) / E(w, 0))^{1/δ}`.
    pub window: f64,
    /// `∫_0^{window} ∫_ω |∂_t w|²`.
    pub observed: f64,
    /// `‖(w0, w1)‖²_{H¹₀×L²} = 2E(w, 0)`.
    pub lhs: f64,
}

pub fn observation_window(
    sys: &DampedSystem,
    s0: &SpectralState,
    constant: f64,
    delta: f64,
    tol: f64,
) -> Result<ObservationWindow> {
    if !(constant > 0.0 && delta > 0.0) {
        return Err(Error::invalid("C/delta", "constants must be positive"));
    }
    let e0 = energy(&sys.modes, s0);
    if s0.is_zero() || e0 == 0.0 {
        return Err(Error::invalid("state", "initial data must be non-zero"));
    }
    let e_dt = higher_energy_at_zero(sys, s0)?;
    let window = constant * (e_dt / e0).powf(1.0 / delta);
    let traj = solve(sys, s0, window, sys.default_grid_points(window), tol)?;
    let observed = traj.dissipated(&sys.damping, 0.0, window)?;
    Ok(ObservationWindow {
        window,
        observed,
        lhs: 2.0 * e0,
    })
}
