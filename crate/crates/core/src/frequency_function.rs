//! Frequency function of planar harmonic functions on balls and half-balls.
//!
//! For `v` harmonic near `B(y_o, R_o)` and `0 < r < R_o`:
//!
//! ```text
//! H(r) = ∫_{B_r} v²,   D(r) = ∫_{B_r} |∇v|² (r² - |y - y_o|²),   Φ = D / H.
//! ```
//!
//! `Φ` is nondecreasing and `d/dr ln H = (2 + Φ)/r` in the plane, which
//! makes `ln H` convex in `ln r` (the three-ball inequality). On the upper
//! half-disk with `v = 0` on the diameter the same holds with balls
//! replaced by `B_r ∩ D`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use std::f64::consts::PI;

/// A real function of two variables with its gradient.
pub trait ScalarField: Send + Sync {
    fn value(&self, y: [f64; 2]) -> f64;
    fn gradient(&self, y: [f64; 2]) -> [f64; 2];
}

/// `v(y) = Re(Σ_m α_m (z - c)^m)` with `z = y1 + i y2`.
///
/// A term `p Re((z-c)^m) + q Im((z-c)^m)` corresponds to `α_m = p - iq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPolynomial {
    pub center: [f64; 2],
    /// `(m, α_m)` pairs; repeated degrees add up.
    pub terms: Vec<(u32, [f64; 2])>,
}

impl HarmonicPolynomial {
    pub fn new(center: [f64; 2]) -> Self {
        Self {
            center,
            terms: Vec::new(),
        }
    }

    /// Adds `coeff · Re((z - c)^m)`.
    pub fn with_real(mut self, m: u32, coeff: f64) -> Self {
        self.terms.push((m, [coeff, 0.0]));
        self
    }

    /// Adds `coeff · Im((z - c)^m)`.
    pub fn with_imag(mut self, m: u32, coeff: f64) -> Self {
        self.terms.push((m, [0.0, -coeff]));
        self
    }

    fn shifted(&self, y: [f64; 2]) -> Complex64 {
        Complex64::new(y[0] - self.center[0], y[1] - self.center[1])
    }
}

impl ScalarField for HarmonicPolynomial {
    fn value(&self, y: [f64; 2]) -> f64 {
        let z = self.shifted(y);
        self.terms
            .iter()
            .map(|&(m, [re, im])| (Complex64::new(re, im) * z.powu(m)).re)
            .sum()
    }

    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        let z = self.shifted(y);
        let dz: Complex64 = self
            .terms
            .iter()
            .filter(|(m, _)| *m > 0)
            .map(|&(m, [re, im])| Complex64::new(re, im) * f64::from(m) * z.powu(m - 1))
            .sum();
        [dz.re, -dz.im]
    }
}

/// Field given by closures, for harness use.
pub struct FnField<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> ScalarField for FnField<V, G>
where
    V: Fn([f64; 2]) -> f64 + Send + Sync,
    G: Fn([f64; 2]) -> [f64; 2] + Send + Sync,
{
    fn value(&self, y: [f64; 2]) -> f64 {
        (self.value)(y)
    }

    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        (self.gradient)(y)
    }
}

/// Where the balls live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    /// Full balls `B(center, r)`, `r < outer_radius`, inside the domain.
    InteriorBall { center: [f64; 2], outer_radius: f64 },
    /// Domain `D` = upper half-disk of radius `disk_radius` centred at
    /// `(center[0], 0)`; `Γ` its diameter; balls `B(center, r) ∩ D` with
    /// `center[1] >= 0`.
    HalfDisk {
        center: [f64; 2],
        outer_radius: f64,
        disk_radius: f64,
    },
}

impl Geometry {
    pub fn center(&self) -> [f64; 2] {
        match *self {
            Geometry::InteriorBall { center, .. } | Geometry::HalfDisk { center, .. } => center,
        }
    }

    pub fn outer_radius(&self) -> f64 {
        match *self {
            Geometry::InteriorBall { outer_radius, .. } | Geometry::HalfDisk { outer_radius, .. } => outer_radius,
        }
    }

    /// Distance from the centre to the Dirichlet line, `∞` for interior balls.
    pub fn height(&self) -> f64 {
        match *self {
            Geometry::InteriorBall { .. } => f64::INFINITY,
            Geometry::HalfDisk { center, .. } => center[1],
        }
    }

    fn validate(&self) -> Result<()> {
        let c = self.center();
        let r = self.outer_radius();
        if !(r > 0.0 && r.is_finite() && c.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("geometry", "outer radius must be positive and centre finite"));
        }
        if let Geometry::HalfDisk { center, disk_radius, .. } = *self {
            if center[1] < 0.0 {
                return Err(Error::invalid("geometry", "centre must lie in the closed upper half-disk"));
            }
            // Balls up to R_o must meet ∂D only on the diameter.
            if center[1] + r > disk_radius {
                return Err(Error::invalid(
                    "geometry",
                    format!("B(y_o, {r}) reaches the arc of the half-disk of radius {disk_radius}"),
                ));
            }
        }
        Ok(())
    }
}

/// Quadrature resolution for ball integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 256,
        }
    }
}

/// A field that passed the harmonic screen, with its geometry.
pub struct HarmonicSample {
    field: Box<dyn ScalarField>,
    geometry: Geometry,
    /// Largest finite-difference Laplacian residual relative to the screen scale.
    pub screen_residual: f64,
}

const SCREEN_POINTS: usize = 50;
const SCREEN_TOL: f64 = 1e-8;
const BOUNDARY_TOL: f64 = 1e-12;

impl std::fmt::Debug for HarmonicSample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicSample")
            .field("geometry", &self.geometry)
            .field("screen_residual", &self.screen_residual)
            .finish()
    }
}

impl HarmonicSample {
    /// Screens the field: Richardson-extrapolated 5-point Laplacian at 50
    /// pseudo-random points of the outer ball must stay below
    /// `1e-8 · max(|v| + R|∇v|)/R²`; on a half-disk the field must also
    /// vanish on the diameter.
    pub fn new(field: impl ScalarField + 'static, geometry: Geometry) -> Result<Self> {
        geometry.validate()?;
        let c = geometry.center();
        let big_r = geometry.outer_radius();
        let step = 0.05 * big_r;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        let mut points = Vec::with_capacity(SCREEN_POINTS);
        while points.len() < SCREEN_POINTS {
            let rho = big_r * rng.gen::<f64>().sqrt();
            let th = 2.0 * PI * rng.gen::<f64>();
            let p = [c[0] + rho * th.cos(), c[1] + rho * th.sin()];
            if matches!(geometry, Geometry::HalfDisk { .. }) && p[1] < 1.5 * step {
                continue;
            }
            points.push(p);
        }
        let mut scale: f64 = 0.0;
        for &p in &points {
            let g = field.gradient(p);
            scale = scale.max(field.value(p).abs() + big_r * g[0].hypot(g[1]));
        }
        let scale = scale / (big_r * big_r);
        let threshold = SCREEN_TOL * scale.max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for &p in &points {
            let lap = extrapolated_laplacian(&field, p, step);
            if !lap.is_finite() || lap.abs() > threshold {
                return Err(Error::NotHarmonic {
                    residual: lap.abs(),
                    threshold,
                    x1: p[0],
                    x2: p[1],
                });
            }
            worst = worst.max(lap.abs() / threshold * SCREEN_TOL);
        }
        if let Geometry::HalfDisk { .. } = geometry {
            let vscale = points.iter().map(|&p| field.value(p).abs()).fold(0.0, f64::max);
            for i in 0..=20 {
                let x1 = c[0] - big_r + 2.0 * big_r * i as f64 / 20.0;
                let v = field.value([x1, 0.0]);
                if v.abs() > BOUNDARY_TOL * vscale.max(f64::MIN_POSITIVE) {
                    return Err(Error::BoundaryViolation { value: v, x1 });
                }
            }
        }
        Ok(Self {
            field: Box::new(field),
            geometry,
            screen_residual: worst,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn value(&self, y: [f64; 2]) -> f64 {
        self.field.value(y)
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let big_r = self.geometry.outer_radius();
        if !(r > 0.0 && r < big_r) {
            return Err(Error::invalid("radius", format!("{r} must lie in (0, {big_r})")));
        }
        Ok(())
    }

    /// `(H, D, ∫ |(y - y_o)·∇v|²)` over `B_r ∩ D`.
    pub fn moments(&self, r: f64, quad: QuadSpec) -> Result<BallMoments> {
        self.check_radius(r)?;
        if quad.radial == 0 || quad.angular == 0 {
            return Err(Error::invalid("quad", "node counts must be positive"));
        }
        let c = self.geometry.center();
        let h = self.geometry.height();
        let radial = GaussLegendre::new(quad.radial);
        let mut acc = BallMoments::default();
        let mut add = |rho: f64, th: f64, w: f64| {
            let dir = [th.cos(), th.sin()];
            let y = [c[0] + rho * dir[0], c[1] + rho * dir[1]];
            let v = self.field.value(y);
            let g = self.field.gradient(y);
            let grad2 = g[0] * g[0] + g[1] * g[1];
            let radial_deriv = rho * (g[0] * dir[0] + g[1] * dir[1]);
            acc.h += w * v * v;
            acc.d += w * grad2 * (r * r - rho * rho);
            acc.radial += w * radial_deriv * radial_deriv;
        };

        // Full circles up to min(r, h): Gauss in ρ, periodic trapezoid in θ.
        let full = r.min(h);
        if full > 0.0 {
            let dth = 2.0 * PI / quad.angular as f64;
            for (rho, wr) in radial.on_interval(0.0, full) {
                for k in 0..quad.angular {
                    add(rho, k as f64 * dth, wr * rho * dth);
                }
            }
        }
        // Arcs above the diameter for h < ρ < r, with ρ = h + (r - h)u² to
        // absorb the square-root behaviour of the arc ends at ρ = h.
        if h < r {
            let arc = GaussLegendre::new(quad.angular / 2);
            for (u, wu) in radial.on_interval(0.0, 1.0) {
                let rho = h + (r - h) * u * u;
                let jac = 2.0 * (r - h) * u;
                let half_open = (h / rho).clamp(-1.0, 1.0).asin();
                for (th, wt) in arc.on_interval(-half_open, PI + half_open) {
                    add(rho, th, wu * jac * rho * wt);
                }
            }
        }
        Ok(acc)
    }

    /// `H(r) = ∫_{B_r ∩ D} v²`.
    pub fn h(&self, r: f64, quad: QuadSpec) -> Result<f64> {
        Ok(self.moments(r, quad)?.h)
    }
}

fn five_point(field: &dyn ScalarField, p: [f64; 2], s: f64) -> f64 {
    let c = field.value(p);
    (field.value([p[0] + s, p[1]])
        + field.value([p[0] - s, p[1]])
        + field.value([p[0], p[1] + s])
        + field.value([p[0], p[1] - s])
        - 4.0 * c)
        / (s * s)
}

/// Three-level Richardson extrapolation of the 5-point Laplacian,
/// eliminating the `s²` and `s⁴` error terms.
fn extrapolated_laplacian(field: &dyn ScalarField, p: [f64; 2], s: f64) -> f64 {
    let l1 = five_point(field, p, s);
    let l2 = five_point(field, p, s / 2.0);
    let l3 = five_point(field, p, s / 4.0);
    let r1 = (4.0 * l2 - l1) / 3.0;
    let r2 = (4.0 * l3 - l2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BallMoments {
    pub h: f64,
    pub d: f64,
    pub radial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub phi: Vec<f64>,
}

pub fn profile(sample: &HarmonicSample, radii: &[f64], quad: QuadSpec) -> Result<RadialProfile> {
    if quad.radial < 8 || quad.angular < 8 {
        return Err(Error::invalid("quad", "need at least 8 nodes per direction"));
    }
    let mut out = RadialProfile {
        radii: radii.to_vec(),
        h: Vec::with_capacity(radii.len()),
        d: Vec::with_capacity(radii.len()),
        phi: Vec::with_capacity(radii.len()),
    };
    for &r in radii {
        let m = sample.moments(r, quad)?;
        if !(m.h > 0.0) {
            return Err(Error::invalid("sample", format!("H({r}) = {} is not positive", m.h)));
        }
        out.h.push(m.h);
        out.d.push(m.d);
        out.phi.push(m.d / m.h);
    }
    Ok(out)
}

/// `max_i (Φ(r_i) - Φ(r_{i+1}))₊` over consecutive radii.
pub fn monotonicity_check(p: &RadialProfile) -> f64 {
    p.phi.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
}

/// `|(ln H(r+dr) - ln H(r-dr)) / 2dr - (2 + Φ(r))/r|`.
pub fn log_derivative_check(sample: &HarmonicSample, r: f64, quad: QuadSpec, dr: f64) -> Result<f64> {
    if !(dr > 0.0) {
        return Err(Error::invalid("dr", "step must be positive"));
    }
    let lo = sample.h(r - dr, quad)?;
    let hi = sample.h(r + dr, quad)?;
    let mid = sample.moments(r, quad)?;
    let fd = (hi.ln() - lo.ln()) / (2.0 * dr);
    Ok((fd - (2.0 + mid.d / mid.h) / r).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBall {
    pub lhs: f64,
    pub rhs: f64,
    pub alpha: f64,
    pub satisfied: bool,
}

/// Relative slack in the three-ball comparison, absorbing quadrature
/// rounding in the equality cases.
pub const THREE_BALL_TOL: f64 = 1e-9;

/// `H(r2) ≤ H(r1)^α H(r3)^{1-α}` with
/// `α = (1/ln(r2/r1)) / (1/ln(r2/r1) + 1/ln(r3/r2))`.
///
/// On a half-disk the integrals run over `B_r ∩ D`. With the centre off
/// the diameter, `r1` must be below its height so the inner ball lies in
/// `D` (the mixed inner/outer form); with the centre on the diameter all
/// three are half-balls.
pub fn three_ball_check(sample: &HarmonicSample, r1: f64, r2: f64, r3: f64, quad: QuadSpec) -> Result<ThreeBall> {
    if !(0.0 < r1 && r1 < r2 && r2 < r3 && r3 < sample.geometry.outer_radius()) {
        return Err(Error::invalid(
            "radii",
            format!(
                "need 0 < r1 < r2 < r3 < {}, got ({r1}, {r2}, {r3})",
                sample.geometry.outer_radius()
            ),
        ));
    }
    let height = sample.geometry.height();
    if height > 0.0 && height.is_finite() && r1 >= height {
        return Err(Error::invalid(
            "radii",
            format!("inner radius {r1} must be below the distance {height} to the Dirichlet boundary"),
        ));
    }
    let h1 = sample.h(r1, quad)?;
    let h2 = sample.h(r2, quad)?;
    let h3 = sample.h(r3, quad)?;
    let (l21, l32) = ((r2 / r1).ln(), (r3 / r2).ln());
    let alpha = (1.0 / l21) / (1.0 / l21 + 1.0 / l32);
    let rhs = h1.powf(alpha) * h3.powf(1.0 - alpha);
    Ok(ThreeBall {
        lhs: h2,
        rhs,
        alpha,
        satisfied: h2 <= rhs * (1.0 + THREE_BALL_TOL),
    })
}

/// `(D(r)², 4 ∫|(y - y_o)·∇v|² · H(r))`; the first never exceeds the second.
pub fn cauchy_schwarz_check(sample: &HarmonicSample, r: f64, quad: QuadSpec) -> Result<(f64, f64)> {
    let m = sample.moments(r, quad)?;
    Ok((m.d * m.d, 4.0 * m.radial * m.h))
}

/// Random harmonic polynomial of degree ≤ 6 about a random centre near the
/// origin, for interior-ball suites.
pub fn random_interior_polynomial(rng: &mut impl Rng) -> HarmonicPolynomial {
    let mut p = HarmonicPolynomial::new([rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)]);
    for m in 0..=6u32 {
        p = p.with_real(m, rng.gen_range(-1.0..1.0));
        if m > 0 {
            p = p.with_imag(m, rng.gen_range(-1.0..1.0));
        }
    }
    p
}

/// Random combination of `Im((z - c)^m)`, `m ≤ 6`, with `c` on the real
/// axis; vanishes on the diameter.
pub fn random_dirichlet_polynomial(rng: &mut impl Rng) -> HarmonicPolynomial {
    let mut p = HarmonicPolynomial::new([rng.gen_range(-0.3..0.3), 0.0]);
    for m in 1..=6u32 {
        p = p.with_imag(m, rng.gen_range(-1.0..1.0));
    }
    p
}
