//! Exact spectral evolution of the free wave equation, Duhamel evolution
//! under forcing localized on a region, energies and Sobolev norms.
//!
//! A [`SpectralState`] holds the coefficients of `(u, ∂_t u)` in the
//! Dirichlet eigenbasis. Each mode is a harmonic oscillator of frequency
//! `sqrt(lambda)`, so free evolution is a per-mode rotation and carries no
//! time-discretization error.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{hermite_eval, hermite_weights, natural_spline_slopes};
use crate::quadrature::GaussLegendre;
use crate::spectral_basis::{MassMatrix, ModeSet, Region};

/// Coefficients of position `a` and velocity `b` in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SpectralState {
    pub fn zeros(len: usize) -> Self {
        Self {
            a: vec![0.0; len],
            b: vec![0.0; len],
        }
    }

    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "spectral state",
                expected: a.len(),
                found: b.len(),
            });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("state", "coefficients must be finite"));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.b).all(|v| v.is_finite())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            a: self.a.iter().map(|v| alpha * v).collect(),
            b: self.b.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn added(&self, other: &Self) -> Self {
        Self {
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn subtracted(&self, other: &Self) -> Self {
        self.added(&other.scaled(-1.0))
    }

    pub(crate) fn check_len(&self, ms: &ModeSet, context: &'static str) -> Result<()> {
        if self.len() != ms.len() || self.b.len() != self.a.len() {
            return Err(Error::DimensionMismatch {
                context,
                expected: ms.len(),
                found: self.len().max(self.b.len()),
            });
        }
        Ok(())
    }
}

/// Spectral norm levels for `(position, velocity)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SobolevLevel {
    /// `L² × H⁻¹`: `Σ (a² + b²/λ)`.
    L2Hm1,
    /// `H¹₀ × L²`: `Σ (λa² + b²)`.
    H1L2,
    /// `H² ∩ H¹₀ × H¹₀`: `Σ (λ²a² + λb²)`.
    H2H1,
}

/// Per-mode rotation by time `t` (any sign).
pub fn evolve_free(ms: &ModeSet, s0: &SpectralState, t: f64) -> SpectralState {
    let mut out = SpectralState::zeros(s0.len());
    for (j, m) in ms.modes().iter().enumerate().take(s0.len()) {
        let w = m.frequency();
        let (sn, cs) = (t * w).sin_cos();
        out.a[j] = s0.a[j] * cs + s0.b[j] * sn / w;
        out.b[j] = -s0.a[j] * w * sn + s0.b[j] * cs;
    }
    out
}

/// `½ Σ (λ a² + b²)`, the Parseval form of `½∫(|∇u|² + |∂_t u|²)`.
pub fn energy(ms: &ModeSet, s: &SpectralState) -> f64 {
    0.5 * ms
        .modes()
        .iter()
        .zip(s.a.iter().zip(&s.b))
        .map(|(m, (a, b))| m.lambda * a * a + b * b)
        .sum::<f64>()
}

pub fn sobolev_norm(ms: &ModeSet, s: &SpectralState, level: SobolevLevel) -> f64 {
    ms.modes()
        .iter()
        .zip(s.a.iter().zip(&s.b))
        .map(|(m, (a, b))| {
            let l = m.lambda;
            match level {
                SobolevLevel::L2Hm1 => a * a + b * b / l,
                SobolevLevel::H1L2 => l * a * a + b * b,
                SobolevLevel::H2H1 => l * l * a * a + l * b * b,
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// The frequency ratio `‖·‖_{H²×H¹} / ‖·‖_{H¹×L²}`.
pub fn lambda_ratio(ms: &ModeSet, s: &SpectralState) -> Result<f64> {
    let low = sobolev_norm(ms, s, SobolevLevel::H1L2);
    if low == 0.0 {
        return Err(Error::invalid("state", "frequency ratio is undefined for the zero state"));
    }
    Ok(sobolev_norm(ms, s, SobolevLevel::H2H1) / low)
}

/// `∫₀ᵀ ∫_ω |∂_t u|²` for the free solution from `s0`, with the region
/// carried by `mass`. Gauss–Legendre in time with `quad_per_unit` nodes on
/// each unit-length panel.
pub fn observation_functional(
    ms: &ModeSet,
    s0: &SpectralState,
    mass: &MassMatrix,
    horizon: f64,
    quad_per_unit: usize,
) -> Result<f64> {
    s0.check_len(ms, "observation functional")?;
    if mass.size() != ms.len() {
        return Err(Error::DimensionMismatch {
            context: "observation mass matrix",
            expected: ms.len(),
            found: mass.size(),
        });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("T", format!("horizon must be positive, got {horizon}")));
    }
    if quad_per_unit == 0 {
        return Err(Error::invalid("quad", "need at least one node per unit time"));
    }
    let panels = horizon.ceil() as usize;
    let width = horizon / panels as f64;
    let rule = GaussLegendre::new(((quad_per_unit as f64) * width).ceil() as usize);
    let freqs = ms.frequencies();
    let mut velocity = vec![0.0; ms.len()];
    let mut total = 0.0;
    for p in 0..panels {
        let lo = p as f64 * width;
        for (t, w) in rule.on_interval(lo, lo + width) {
            for (j, v) in velocity.iter_mut().enumerate() {
                let (sn, cs) = (t * freqs[j]).sin_cos();
                *v = -s0.a[j] * freqs[j] * sn + s0.b[j] * cs;
            }
            total += w * mass.quadratic_form(&velocity);
        }
    }
    Ok(total)
}

/// Time samples of the spectral density `g(t)` of a force
/// `-1_ω Σ g_i(t) e_i`, interpolated by piecewise cubic Hermite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingRecord {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    region: Region,
}

impl ForcingRecord {
    /// Record with slopes from the natural cubic spline through the samples.
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>, region: Region) -> Result<Self> {
        Self::validate(&times, &values)?;
        let slopes = natural_spline_slopes(&times, &values);
        Ok(Self {
            times,
            values,
            slopes,
            region,
        })
    }

    /// Record with known time derivatives at the samples.
    pub fn with_slopes(times: Vec<f64>, values: Vec<Vec<f64>>, slopes: Vec<Vec<f64>>, region: Region) -> Result<Self> {
        Self::validate(&times, &values)?;
        Self::validate(&times, &slopes)?;
        if slopes[0].len() != values[0].len() {
            return Err(Error::DimensionMismatch {
                context: "forcing slopes",
                expected: values[0].len(),
                found: slopes[0].len(),
            });
        }
        Ok(Self {
            times,
            values,
            slopes,
            region,
        })
    }

    pub fn zeros(times: Vec<f64>, dim: usize, region: Region) -> Result<Self> {
        let values = vec![vec![0.0; dim]; times.len()];
        Self::with_slopes(times, values.clone(), values, region)
    }

    fn validate(times: &[f64], values: &[Vec<f64>]) -> Result<()> {
        if times.len() < 2 {
            return Err(Error::invalid("forcing", "time grid needs at least two points"));
        }
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "forcing samples",
                expected: times.len(),
                found: values.len(),
            });
        }
        if !times.iter().all(|t| t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("forcing", "time grid must be finite and strictly increasing"));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("forcing", "all samples must have the same length"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("forcing", "samples must be finite"));
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0.0)
    }

    /// Index of the cell `[t_i, t_{i+1}]` containing `t` (clamped).
    fn cell_of(&self, t: f64) -> usize {
        let n = self.times.len();
        match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    fn eval_in_cell(&self, cell: usize, t: f64, out: &mut [f64]) {
        let (t0, t1) = (self.times[cell], self.times[cell + 1]);
        let h = t1 - t0;
        let w = hermite_weights((t - t0) / h, h);
        hermite_eval(
            &w,
            &self.values[cell],
            &self.slopes[cell],
            &self.values[cell + 1],
            &self.slopes[cell + 1],
            out,
        );
    }

    /// Interpolated `g(t)`; `t` must lie in the record span.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        let (start, end) = self.span();
        if !(t >= start && t <= end) {
            return Err(Error::OutsideSpan { t, start, end });
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_in_cell(self.cell_of(t), t, &mut out);
        Ok(out)
    }
}

/// Duhamel evolution of `u'' + λu = R(t)`, `R = -M g(t)`, from `s0` given at
/// the start of the forcing record, sampled at each time of `t_out`.
///
/// Every sub-interval between consecutive breakpoints (record nodes and
/// output times) is advanced by the exact rotation plus a Gauss–Legendre
/// quadrature of the convolution with the interpolated forcing. The node
/// count is chosen so that each node spans at most one radian of the
/// fastest mode.
pub fn evolve_forced(
    ms: &ModeSet,
    s0: &SpectralState,
    forcing: &ForcingRecord,
    mass: &MassMatrix,
    t_out: &[f64],
) -> Result<Vec<SpectralState>> {
    s0.check_len(ms, "forced evolution initial state")?;
    if forcing.dim() != ms.len() {
        return Err(Error::DimensionMismatch {
            context: "forcing record",
            expected: ms.len(),
            found: forcing.dim(),
        });
    }
    if mass.size() != ms.len() {
        return Err(Error::DimensionMismatch {
            context: "forcing mass matrix",
            expected: ms.len(),
            found: mass.size(),
        });
    }
    let (start, end) = forcing.span();
    for &t in t_out {
        if !(t >= start && t <= end) {
            return Err(Error::OutsideSpan { t, start, end });
        }
    }

    let mut order: Vec<usize> = (0..t_out.len()).collect();
    order.sort_by(|&i, &j| t_out[i].total_cmp(&t_out[j]));

    let mut stepper = DuhamelStepper::new(ms, forcing, mass);
    let mut state = s0.clone();
    let mut now = start;
    let mut out = vec![SpectralState::zeros(0); t_out.len()];
    for idx in order {
        let target = t_out[idx];
        while now < target {
            let cell = forcing.cell_of(now);
            let cell_end = forcing.times[cell + 1];
            let seg_end = if cell_end < target { cell_end } else { target };
            stepper.advance(&mut state, cell, now, seg_end);
            now = seg_end;
        }
        out[idx] = state.clone();
    }
    Ok(out)
}

struct DuhamelStepper<'a> {
    freqs: Vec<f64>,
    max_freq: f64,
    forcing: &'a ForcingRecord,
    mass: &'a MassMatrix,
    rules: HashMap<usize, GaussLegendre>,
    g: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> DuhamelStepper<'a> {
    fn new(ms: &ModeSet, forcing: &'a ForcingRecord, mass: &'a MassMatrix) -> Self {
        Self {
            freqs: ms.frequencies(),
            max_freq: ms.max_frequency(),
            forcing,
            mass,
            rules: HashMap::new(),
            g: vec![0.0; ms.len()],
            r: vec![0.0; ms.len()],
        }
    }

    fn advance(&mut self, state: &mut SpectralState, cell: usize, t0: f64, t1: f64) {
        let h = t1 - t0;
        for (j, &w) in self.freqs.iter().enumerate() {
            let (sn, cs) = (h * w).sin_cos();
            let (a, b) = (state.a[j], state.b[j]);
            state.a[j] = a * cs + b * sn / w;
            state.b[j] = -a * w * sn + b * cs;
        }
        let n = 6 + (self.max_freq * h).ceil() as usize;
        let rule = self.rules.entry(n).or_insert_with(|| GaussLegendre::new(n));
        for (s, wq) in rule.on_interval(t0, t1) {
            self.forcing.eval_in_cell(cell, s, &mut self.g);
            if self.g.iter().all(|&v| v == 0.0) {
                continue;
            }
            self.mass.apply(&self.g, &mut self.r);
            for (j, &w) in self.freqs.iter().enumerate() {
                let rj = -self.r[j];
                let (sn, cs) = ((t1 - s) * w).sin_cos();
                state.a[j] += wq * sn / w * rj;
                state.b[j] += wq * cs * rj;
            }
        }
    }
}
