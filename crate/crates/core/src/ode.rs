//! Embedded Runge–Kutta 5(4) (Dormand–Prince) with step-size control.
//!
//! Steps are clipped so that every requested output time is hit exactly;
//! the solution at output times is therefore a step value, never an
//! interpolant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;

/// Integration statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest accepted scaled error estimate (≤ 1 by construction).
    pub max_error_ratio: f64,
}

/// Solution at the output times: states and their time derivatives.
#[derive(Debug, Clone)]
pub struct OdeOutput {
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    pub stats: OdeStats,
}

/// Integrates `y' = f(y)` from `grid[0]` through every time in `grid`
/// (strictly increasing), with mixed absolute/relative tolerance `tol`.
pub fn dopri5<F>(mut rhs: F, y0: &[f64], grid: &[f64], tol: f64) -> Result<OdeOutput>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "output grid must be non-empty and strictly increasing"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tol", format!("tolerance must be positive, got {tol}")));
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    rhs(&y, &mut k1);
    stats.rhs_evals += 1;

    let mut states = Vec::with_capacity(grid.len());
    let mut derivatives = Vec::with_capacity(grid.len());
    states.push(y.clone());
    derivatives.push(k1.clone());
    if grid.len() == 1 {
        return Ok(OdeOutput {
            states,
            derivatives,
            stats,
        });
    }

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut t = grid[0];
    let mut h = initial_step(&mut rhs, &y, &k1, tol, grid[1] - grid[0], &mut stats);
    let mut next_out = 1;

    while next_out < grid.len() {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::StepUnderflow {
                t,
                step: h,
                min_step: 0.0,
                accepted: stats.accepted,
                rejected: stats.rejected,
            });
        }
        let target = grid[next_out];
        let remaining = target - t;
        let mut hit = false;
        let mut step = h;
        if step >= remaining * (1.0 - 1e-12) {
            step = remaining;
            hit = true;
        }
        let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if step < min_step {
            return Err(Error::StepUnderflow {
                t,
                step,
                min_step,
                accepted: stats.accepted,
                rejected: stats.rejected,
            });
        }

        for i in 0..n {
            tmp[i] = y[i] + step * A21 * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(&tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(&tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(&tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(&y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol + tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = if n == 0 { 0.0 } else { (err_sq / n as f64).sqrt() };
        if !err.is_finite() {
            return Err(Error::NonFiniteState { t });
        }

        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };

        if err <= 1.0 {
            stats.accepted += 1;
            stats.max_error_ratio = stats.max_error_ratio.max(err);
            t = if hit { target } else { t + step };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if hit {
                states.push(y.clone());
                derivatives.push(k1.clone());
                next_out += 1;
                // A clipped step says nothing about the natural step size.
                h = h.max(step * factor);
            } else {
                h = step * factor;
            }
        } else {
            stats.rejected += 1;
            h = step * factor.min(1.0);
        }
    }

    Ok(OdeOutput {
        states,
        derivatives,
        stats,
    })
}

/// Starting step following Hairer, Nørsett & Wanner (II.4).
fn initial_step<F>(rhs: &mut F, y: &[f64], f0: &[f64], tol: f64, span: f64, stats: &mut OdeStats) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let scale: Vec<f64> = y.iter().map(|v| tol + tol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&scale).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs(&y1, &mut f1);
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let out = dopri5(|y, dy| dy[0] = -y[0], &[1.0], &grid, 1e-10).unwrap();
        for (t, s) in grid.iter().zip(&out.states) {
            assert!((s[0] - (-t).exp()).abs() < 1e-9);
        }
        assert!(out.stats.max_error_ratio <= 1.0);
    }

    #[test]
    fn harmonic_oscillator_hits_grid_points() {
        let grid = vec![0.0, 0.1, 0.35, 1.0, 7.3];
        let out = dopri5(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -4.0 * y[0];
            },
            &[1.0, 0.0],
            &grid,
            1e-11,
        )
        .unwrap();
        assert_eq!(out.states.len(), grid.len());
        for (t, s) in grid.iter().zip(&out.states) {
            assert!((s[0] - (2.0 * t).cos()).abs() < 1e-9, "t={t}");
        }
        // derivatives are f(y) at the grid points
        for (s, d) in out.states.iter().zip(&out.derivatives) {
            assert_eq!(d[0], s[1]);
        }
    }

    #[test]
    fn rejects_bad_grid_and_tolerance() {
        assert!(dopri5(|_, _| {}, &[1.0], &[0.0, 0.0], 1e-6).is_err());
        assert!(dopri5(|_, _| {}, &[1.0], &[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let err = dopri5(|y, dy| dy[0] = y[0] * y[0], &[1.0], &[0.0, 2.0], 1e-8).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. } | Error::NonFiniteState { .. }));
    }
}
