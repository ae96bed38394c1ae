//! Browser bindings for three small experiments: the energy curve of a
//! damped mode, the error sequence of the time-reversal control, and the
//! frequency function of a harmonic polynomial.
//!
//! The `*_impl` functions hold the logic and run natively in tests; the
//! exported wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use wave_control::control_loop::{cost, iterate, verify_controlled, ControlProblem};
use wave_control::damped_dynamics::{solve, DampedSystem};
use wave_control::frequency_function::{profile, Geometry, HarmonicPolynomial, HarmonicSample, QuadSpec};
use wave_control::spectral_basis::{enumerate_modes, Region};
use wave_control::wave_dynamics::SpectralState;

fn strip(lo: f64, hi: f64) -> Result<Region, String> {
    Region::strip(lo, hi).map_err(|e| e.to_string())
}

/// `[t0, E0, t1, E1, ...]` for unit displacement in mode `(k, l)`, damped
/// on `(lo, hi) x (0, 1)`.
pub fn damped_energy_impl(modes: usize, k: u32, l: u32, lo: f64, hi: f64, horizon: f64) -> Result<Vec<f64>, String> {
    let ms = enumerate_modes(modes).map_err(|e| e.to_string())?;
    let j = ms
        .position(k, l)
        .ok_or_else(|| format!("mode ({k}, {l}) is not among the first {modes}"))?;
    let sys = DampedSystem::assemble(&ms, strip(lo, hi)?);
    let mut s0 = SpectralState::zeros(modes);
    s0.a[j] = 1.0;
    let traj = solve(&sys, &s0, horizon, sys.default_grid_points(horizon), 1e-8).map_err(|e| e.to_string())?;
    Ok(traj
        .times()
        .iter()
        .zip(traj.energies(&ms))
        .flat_map(|(t, e)| [*t, e])
        .collect())
}

#[derive(Debug, Serialize)]
pub struct ControlCurve {
    /// `d_j`, `j = -1..=2N`.
    pub d: Vec<f64>,
    pub predicted_error: f64,
    pub achieved_error: f64,
    pub cost: f64,
}

/// Control from rest toward `(e1 + e2, e1)` on `(lo, hi) x (0, 1)`.
pub fn control_curve_impl(modes: usize, iterations: usize, lo: f64, hi: f64, horizon: f64) -> Result<ControlCurve, String> {
    if modes < 2 {
        return Err("need at least 2 modes".into());
    }
    let mut target = SpectralState::zeros(modes);
    target.a[0] = 1.0;
    target.a[1] = 1.0;
    target.b[0] = 1.0;
    let problem = ControlProblem {
        modes: enumerate_modes(modes).map_err(|e| e.to_string())?,
        region: strip(lo, hi)?,
        horizon,
        iterations,
        initial: SpectralState::zeros(modes),
        target,
        tol: 1e-8,
        samples_per_unit: None,
    };
    let run = iterate(&problem).map_err(|e| e.to_string())?;
    let check = verify_controlled(&problem, &run).map_err(|e| e.to_string())?;
    Ok(ControlCurve {
        cost: cost(&run.control, &problem.mass_matrix()),
        d: run.d,
        predicted_error: check.predicted_error,
        achieved_error: check.achieved_error,
    })
}

/// `[r, H, Phi, ...]` on 40 radii in `(0, 1)` for
/// `v = Σ_m coeffs[m] Re((z - c)^m)` about `c = (cx, cy)`.
pub fn frequency_profile_impl(coeffs: &[f64], cx: f64, cy: f64) -> Result<Vec<f64>, String> {
    let mut poly = HarmonicPolynomial::new([cx, cy]);
    for (m, c) in coeffs.iter().enumerate() {
        poly = poly.with_real(m as u32, *c);
    }
    let geometry = Geometry::InteriorBall {
        center: [0.0, 0.0],
        outer_radius: 1.0,
    };
    let sample = HarmonicSample::new(poly, geometry).map_err(|e| e.to_string())?;
    let radii: Vec<f64> = (1..=40).map(|i| 0.024 * i as f64).collect();
    let p = profile(&sample, &radii, QuadSpec::default()).map_err(|e| e.to_string())?;
    Ok((0..radii.len()).flat_map(|i| [p.radii[i], p.h[i], p.phi[i]]).collect())
}

#[wasm_bindgen]
pub fn damped_energy(modes: usize, k: u32, l: u32, lo: f64, hi: f64, horizon: f64) -> Result<Vec<f64>, JsError> {
    damped_energy_impl(modes, k, l, lo, hi, horizon).map_err(|e| JsError::new(&e))
}

/// JSON object with `d`, `predicted_error`, `achieved_error` and `cost`.
#[wasm_bindgen]
pub fn control_curve(modes: usize, iterations: usize, lo: f64, hi: f64, horizon: f64) -> Result<String, JsError> {
    let curve = control_curve_impl(modes, iterations, lo, hi, horizon).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&curve).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn frequency_profile(coeffs: Vec<f64>, cx: f64, cy: f64) -> Result<Vec<f64>, JsError> {
    frequency_profile_impl(&coeffs, cx, cy).map_err(|e| JsError::new(&e))
}
