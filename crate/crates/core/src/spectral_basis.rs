//! Dirichlet eigenpairs of the unit square, projections onto them and the
//! mass matrix of the eigenfunctions restricted to a damping/observation
//! region.
//!
//! The eigenfunctions are `e(x1, x2) = 2 sin(πk x1) sin(πl x2)` with
//! eigenvalue `π²(k² + l²)`; they are orthonormal in `L²((0,1)²)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::composite_rule;

/// One Dirichlet eigenpair, identified by its wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "(u32, u32, f64)", try_from = "(u32, u32, f64)")]
pub struct ModeIndex {
    pub k: u32,
    pub l: u32,
    pub lambda: f64,
}

impl ModeIndex {
    pub fn new(k: u32, l: u32) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::invalid("mode", format!("wavenumbers must be >= 1, got ({k}, {l})")));
        }
        Ok(Self {
            k,
            l,
            lambda: PI * PI * f64::from(k * k + l * l),
        })
    }

    /// `k² + l²`, the integer that orders eigenvalues exactly.
    pub fn level(&self) -> u64 {
        u64::from(self.k) * u64::from(self.k) + u64::from(self.l) * u64::from(self.l)
    }

    pub fn frequency(&self) -> f64 {
        self.lambda.sqrt()
    }
}

impl From<ModeIndex> for (u32, u32, f64) {
    fn from(m: ModeIndex) -> Self {
        (m.k, m.l, m.lambda)
    }
}

impl TryFrom<(u32, u32, f64)> for ModeIndex {
    type Error = Error;

    fn try_from((k, l, lambda): (u32, u32, f64)) -> Result<Self> {
        let m = ModeIndex::new(k, l)?;
        if (m.lambda - lambda).abs() > 1e-9 * m.lambda {
            return Err(Error::invalid(
                "mode",
                format!("eigenvalue {lambda} inconsistent with ({k}, {l}), expected {}", m.lambda),
            ));
        }
        Ok(m)
    }
}

/// The `G` lowest Dirichlet modes of the unit square, sorted by
/// `(lambda, k, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModeSetRepr")]
pub struct ModeSet {
    modes: Vec<ModeIndex>,
}

#[derive(Deserialize)]
struct ModeSetRepr {
    modes: Vec<ModeIndex>,
}

impl TryFrom<ModeSetRepr> for ModeSet {
    type Error = Error;

    fn try_from(repr: ModeSetRepr) -> Result<Self> {
        if repr.modes.is_empty() {
            return Err(Error::invalid("modes", "mode set must not be empty"));
        }
        let ordered = repr
            .modes
            .windows(2)
            .all(|w| (w[0].level(), w[0].k, w[0].l) < (w[1].level(), w[1].k, w[1].l));
        if !ordered {
            return Err(Error::invalid("modes", "modes must be strictly increasing in (lambda, k, l)"));
        }
        Ok(ModeSet { modes: repr.modes })
    }
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn get(&self, j: usize) -> &ModeIndex {
        &self.modes[j]
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(ModeIndex::frequency).collect()
    }

    /// Largest `sqrt(lambda)` in the set.
    pub fn max_frequency(&self) -> f64 {
        self.modes.last().map_or(0.0, ModeIndex::frequency)
    }

    /// Position of the mode `(k, l)`, if it belongs to the set.
    pub fn position(&self, k: u32, l: u32) -> Option<usize> {
        self.modes.iter().position(|m| m.k == k && m.l == l)
    }

    /// Synthesizes `sum_j c_j e_j(x1, x2)`.
    pub fn synthesize(&self, coeffs: &[f64], x1: f64, x2: f64) -> f64 {
        self.modes
            .iter()
            .zip(coeffs)
            .map(|(m, c)| c * eval_mode(m, x1, x2))
            .sum()
    }
}

/// The `count` Dirichlet modes of smallest eigenvalue, ties broken by
/// `(k, l)`.
pub fn enumerate_modes(count: usize) -> Result<ModeSet> {
    if count == 0 {
        return Err(Error::invalid("G", "mode count must be at least 1"));
    }
    let mut side = ((count as f64).sqrt() * 4.0).ceil() as u32 + 8;
    loop {
        let mut candidates = Vec::with_capacity((side * side) as usize);
        for k in 1..=side {
            for l in 1..=side {
                candidates.push((k * k + l * l, k, l));
            }
        }
        candidates.sort_unstable();
        let last_level = u64::from(candidates[count - 1].0);
        // Any (k, l) outside the box has k² + l² >= (side+1)² + 1.
        let outside_min = u64::from(side + 1).pow(2) + 1;
        if last_level < outside_min {
            let modes = candidates[..count]
                .iter()
                .map(|&(_, k, l)| ModeIndex::new(k, l))
                .collect::<Result<Vec<_>>>()?;
            return Ok(ModeSet { modes });
        }
        side *= 2;
    }
}

/// `2 sin(πk x1) sin(πl x2)`.
pub fn eval_mode(m: &ModeIndex, x1: f64, x2: f64) -> f64 {
    2.0 * (PI * f64::from(m.k) * x1).sin() * (PI * f64::from(m.l) * x2).sin()
}

/// Gradient of [`eval_mode`].
pub fn eval_mode_gradient(m: &ModeIndex, x1: f64, x2: f64) -> [f64; 2] {
    let (kx, ly) = (PI * f64::from(m.k), PI * f64::from(m.l));
    [
        2.0 * kx * (kx * x1).cos() * (ly * x2).sin(),
        2.0 * ly * (kx * x1).sin() * (ly * x2).cos(),
    ]
}

/// Damping/observation region inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", try_from = "RegionRepr")]
pub enum Region {
    FullDomain,
    /// `(x1_lo, x1_hi) × (0, 1)`.
    AxisStrip { x1_lo: f64, x1_hi: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RegionRepr {
    FullDomain,
    AxisStrip { x1_lo: f64, x1_hi: f64 },
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;

    fn try_from(r: RegionRepr) -> Result<Self> {
        match r {
            RegionRepr::FullDomain => Ok(Region::FullDomain),
            RegionRepr::AxisStrip { x1_lo, x1_hi } => Region::strip(x1_lo, x1_hi),
        }
    }
}

impl Region {
    pub fn strip(x1_lo: f64, x1_hi: f64) -> Result<Self> {
        if !(x1_lo.is_finite() && x1_hi.is_finite()) || x1_lo < 0.0 || x1_hi > 1.0 || x1_lo >= x1_hi {
            return Err(Error::invalid(
                "region",
                format!("strip bounds must satisfy 0 <= lo < hi <= 1, got ({x1_lo}, {x1_hi})"),
            ));
        }
        if x1_lo == 0.0 && x1_hi == 1.0 {
            return Ok(Region::FullDomain);
        }
        Ok(Region::AxisStrip { x1_lo, x1_hi })
    }

    /// The strip `(0, 1/5) × (0, 1)` used by both worked examples.
    pub fn fifth_strip() -> Self {
        Region::AxisStrip { x1_lo: 0.0, x1_hi: 0.2 }
    }

    pub fn x1_bounds(&self) -> (f64, f64) {
        match *self {
            Region::FullDomain => (0.0, 1.0),
            Region::AxisStrip { x1_lo, x1_hi } => (x1_lo, x1_hi),
        }
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        let (lo, hi) = self.x1_bounds();
        (0.0..=1.0).contains(&x2) && x1 >= lo && x1 <= hi
    }

    pub fn area(&self) -> f64 {
        let (lo, hi) = self.x1_bounds();
        hi - lo
    }
}

/// Gram matrix `∫_ω e_i e_j` on a mode set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MassMatrixRepr")]
pub struct MassMatrix {
    size: usize,
    region: Region,
    /// Row-major `size × size`.
    entries: Vec<f64>,
    #[serde(skip)]
    rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Deserialize)]
struct MassMatrixRepr {
    size: usize,
    region: Region,
    entries: Vec<f64>,
}

impl TryFrom<MassMatrixRepr> for MassMatrix {
    type Error = Error;

    fn try_from(r: MassMatrixRepr) -> Result<Self> {
        MassMatrix::from_entries(r.size, r.entries, r.region)
    }
}

impl MassMatrix {
    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1.0;
        }
        Self::build(size, entries, Region::FullDomain)
    }

    /// Wraps explicit entries; they must be finite and symmetric. Used for
    /// test harnesses (undamped limits, fault injection) and deserialization.
    pub fn from_entries(size: usize, entries: Vec<f64>, region: Region) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                context: "mass matrix entries",
                expected: size * size,
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mass matrix", "entries must be finite"));
        }
        for i in 0..size {
            for j in 0..i {
                if entries[i * size + j] != entries[j * size + i] {
                    return Err(Error::invalid("mass matrix", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self::build(size, entries, region))
    }

    fn build(size: usize, entries: Vec<f64>, region: Region) -> Self {
        let rows = (0..size)
            .map(|i| {
                (0..size)
                    .filter_map(|j| {
                        let v = entries[i * size + j];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self {
            size,
            region,
            entries,
            rows,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    /// `out = M x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().map(|&(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    /// Copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::build(
            self.size,
            self.entries.iter().map(|v| v * factor).collect(),
            self.region,
        )
    }
}

/// `∫_lo^hi sin(πa x) sin(πb x) dx` in closed form.
fn sine_product_integral(a: u32, b: u32, lo: f64, hi: f64) -> f64 {
    let anti_cos = |n: u32, x: f64| {
        if n == 0 {
            x
        } else {
            let w = PI * f64::from(n);
            (w * x).sin() / w
        }
    };
    let diff = a.abs_diff(b);
    0.5 * ((anti_cos(diff, hi) - anti_cos(diff, lo)) - (anti_cos(a + b, hi) - anti_cos(a + b, lo)))
}

/// Closed-form `∫_ω e_i e_j`. For a full-height strip the `x2` factor is
/// `δ(l_i, l_j) / 2`, so modes couple only when they share `l`.
pub fn omega_mass_matrix(ms: &ModeSet, region: Region) -> MassMatrix {
    let g = ms.len();
    if region == Region::FullDomain {
        return MassMatrix::identity(g);
    }
    let (lo, hi) = region.x1_bounds();
    let modes = ms.modes();
    let mut entries = vec![0.0; g * g];
    for i in 0..g {
        for j in i..g {
            if modes[i].l != modes[j].l {
                continue;
            }
            let v = 4.0 * 0.5 * sine_product_integral(modes[i].k, modes[j].k, lo, hi);
            entries[i * g + j] = v;
            entries[j * g + i] = v;
        }
    }
    MassMatrix::build(g, entries, region)
}

/// Tensor Gauss–Legendre settings used by [`project_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionRule {
    pub order: usize,
    pub panels_x1: usize,
    pub panels_x2: usize,
}

impl Default for ProjectionRule {
    fn default() -> Self {
        Self {
            order: 32,
            panels_x1: 8,
            panels_x2: 8,
        }
    }
}

impl ProjectionRule {
    pub fn doubled(&self) -> Self {
        Self {
            order: self.order * 2,
            ..*self
        }
    }
}

/// `c_j = ∬ f e_j` by tensor Gauss–Legendre of the given order on the
/// default 8×8 panel grid.
pub fn project(f: impl Fn(f64, f64) -> f64, ms: &ModeSet, quad_order: usize) -> Result<Vec<f64>> {
    project_with(
        f,
        ms,
        &ProjectionRule {
            order: quad_order,
            ..ProjectionRule::default()
        },
    )
}

pub fn project_with(f: impl Fn(f64, f64) -> f64, ms: &ModeSet, rule: &ProjectionRule) -> Result<Vec<f64>> {
    if rule.order == 0 || rule.panels_x1 == 0 || rule.panels_x2 == 0 {
        return Err(Error::invalid("quad_order", "order and panel counts must be >= 1"));
    }
    let (xs, wx) = composite_rule(0.0, 1.0, rule.panels_x1, rule.order);
    let (ys, wy) = composite_rule(0.0, 1.0, rule.panels_x2, rule.order);

    // samples[p][q] = w_p w_q f(x_p, y_q)
    let mut samples = vec![0.0; xs.len() * ys.len()];
    for (p, (&x, &w1)) in xs.iter().zip(&wx).enumerate() {
        let row = &mut samples[p * ys.len()..(p + 1) * ys.len()];
        for ((slot, &y), &w2) in row.iter_mut().zip(&ys).zip(&wy) {
            let v = f(x, y);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { x1: x, x2: y, value: v });
            }
            *slot = w1 * w2 * v;
        }
    }

    // Separable sine factors: first contract over x2 for each distinct l.
    let mut inner: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for m in ms.modes() {
        inner.entry(m.l).or_insert_with(|| {
            let sines: Vec<f64> = ys.iter().map(|&y| (PI * f64::from(m.l) * y).sin()).collect();
            (0..xs.len())
                .map(|p| {
                    samples[p * ys.len()..(p + 1) * ys.len()]
                        .iter()
                        .zip(&sines)
                        .map(|(s, sn)| s * sn)
                        .sum()
                })
                .collect()
        });
    }
    let mut x_sines: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    Ok(ms
        .modes()
        .iter()
        .map(|m| {
            let sx = x_sines
                .entry(m.k)
                .or_insert_with(|| xs.iter().map(|&x| (PI * f64::from(m.k) * x).sin()).collect());
            2.0 * sx.iter().zip(&inner[&m.l]).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}
