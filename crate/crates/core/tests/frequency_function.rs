mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use wave_control::frequency_function::{
    cauchy_schwarz_check, log_derivative_check, monotonicity_check, profile, random_dirichlet_polynomial,
    random_interior_polynomial, three_ball_check, FnField, Geometry, HarmonicPolynomial, HarmonicSample, QuadSpec,
    ScalarField,
};
use wave_control::Error;

fn ball(r: f64) -> Geometry {
    Geometry::InteriorBall {
        center: [0.0, 0.0],
        outer_radius: r,
    }
}

fn half_disk(center: [f64; 2], outer: f64) -> Geometry {
    Geometry::HalfDisk {
        center,
        outer_radius: outer,
        disk_radius: 4.0,
    }
}

/// `∫_{B(c, r) ∩ {y2 > 0}} f` with `y2 = c2 + r sin φ`, `y1 = c1 + r cos φ s`,
/// which keeps the integrand smooth up to the chord.
fn cut_ball_integral(f: impl Fn([f64; 2]) -> f64, c: [f64; 2], r: f64) -> f64 {
    let lo = if c[1] >= r { -PI / 2.0 } else { (-c[1] / r).asin() };
    let mut sum = 0.0;
    for (phi, wp) in common::golub_welsch(60, lo, PI / 2.0) {
        let cp = phi.cos();
        for (s, ws) in common::golub_welsch(40, -1.0, 1.0) {
            let y = [c[0] + r * cp * s, c[1] + r * phi.sin()];
            sum += wp * ws * r * r * cp * cp * f(y);
        }
    }
    sum
}

#[test]
fn closed_form_profile_for_two_term_polynomial() {
    // v = Re z + 0.1 Re z³: angular orthogonality separates the terms.
    let s = HarmonicSample::new(HarmonicPolynomial::new([0.0, 0.0]).with_real(1, 1.0).with_real(3, 0.1), ball(1.0))
        .unwrap();
    let radii = [0.2, 0.4, 0.6, 0.8, 0.95];
    let p = profile(&s, &radii, QuadSpec::default()).unwrap();
    for (i, &r) in radii.iter().enumerate() {
        let h = PI * r.powi(4) / 4.0 + 0.01 * PI * r.powi(8) / 8.0;
        let d = 2.0 * PI * (r.powi(4) / 4.0 + 0.09 * r.powi(8) / 24.0);
        assert!((p.h[i] - h).abs() <= 1e-12 * h, "H({r})");
        assert!((p.d[i] - d).abs() <= 1e-12 * d, "D({r})");
    }
    assert_eq!(monotonicity_check(&p), 0.0);
    assert!(p.phi[0] > 2.0 && p.phi[4] < 2.2);
}

#[test]
fn homogeneous_polynomials_have_constant_frequency() {
    for m in 1..=5 {
        let s = HarmonicSample::new(HarmonicPolynomial::new([0.0, 0.0]).with_imag(m, 1.0), ball(1.0)).unwrap();
        let p = profile(&s, &[0.1, 0.5, 0.9], QuadSpec::default()).unwrap();
        for phi in &p.phi {
            assert!((phi - 2.0 * f64::from(m)).abs() < 1e-10);
        }
        let tb = three_ball_check(&s, 0.2, 0.4, 0.8, QuadSpec::default()).unwrap();
        assert!(tb.satisfied && (tb.lhs / tb.rhs - 1.0).abs() < 1e-12);
        // Equal logarithmic gaps give α = 1/2.
        assert!((tb.alpha - 0.5).abs() < 1e-14);
    }
}

#[test]
fn constant_field() {
    let s = HarmonicSample::new(HarmonicPolynomial::new([0.0, 0.0]).with_real(0, 1.0), ball(1.0)).unwrap();
    let p = profile(&s, &[0.3, 0.7], QuadSpec::default()).unwrap();
    assert!((p.h[0] - PI * 0.09).abs() < 1e-13);
    assert!(p.phi.iter().all(|&x| x.abs() < 1e-15));
    // d/dr ln H = 2/r; centred differences of ln(πr²) are not exact, so
    // compare against the analytic second-order term r⁻³ dr²·(2/3).
    let (r, dr) = (0.5, 0.01);
    let res = log_derivative_check(&s, r, QuadSpec::default(), dr).unwrap();
    let fd = ((r + dr).ln() - (r - dr).ln()) / dr;
    assert!((res - (fd - 2.0 / r).abs()).abs() < 1e-10);
}

#[test]
fn log_derivative_residual_is_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = HarmonicSample::new(random_interior_polynomial(&mut rng), ball(1.0)).unwrap();
    let coarse = log_derivative_check(&s, 0.5, QuadSpec::default(), 0.02).unwrap();
    let fine = log_derivative_check(&s, 0.5, QuadSpec::default(), 0.01).unwrap();
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn half_disk_moments_match_cut_ball_oracle() {
    let p = HarmonicPolynomial::new([0.2, 0.0]).with_imag(1, 1.0).with_imag(2, -0.5).with_imag(5, 0.3);
    for c in [[0.2, 0.0], [0.1, 0.7], [-0.3, 1.5]] {
        let s = HarmonicSample::new(p.clone(), half_disk(c, 2.0)).unwrap();
        for r in [0.3, 1.0, 1.9] {
            let got = s.moments(r, QuadSpec::default()).unwrap();
            let h = cut_ball_integral(|y| p.value(y).powi(2), c, r);
            let d = cut_ball_integral(
                |y| {
                    let g = p.gradient(y);
                    let q = (y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2);
                    (g[0] * g[0] + g[1] * g[1]) * (r * r - q)
                },
                c,
                r,
            );
            assert!((got.h - h).abs() <= 1e-10 * h, "c = {c:?}, r = {r}: {} vs {h}", got.h);
            assert!((got.d - d).abs() <= 1e-10 * d, "c = {c:?}, r = {r}: {} vs {d}", got.d);
        }
    }
}

#[test]
fn half_disk_homogeneous_on_the_diameter() {
    for m in 1..=4 {
        let s = HarmonicSample::new(HarmonicPolynomial::new([0.0, 0.0]).with_imag(m, 1.0), half_disk([0.0, 0.0], 2.0))
            .unwrap();
        let p = profile(&s, &[0.5, 1.0, 1.5], QuadSpec::default()).unwrap();
        for phi in &p.phi {
            assert!((phi - 2.0 * f64::from(m)).abs() < 1e-9, "m = {m}: {phi}");
        }
    }
}

#[test]
fn screens_reject_bad_fields() {
    let sq = FnField {
        value: |y: [f64; 2]| y[0] * y[0],
        gradient: |y: [f64; 2]| [2.0 * y[0], 0.0],
    };
    assert!(matches!(HarmonicSample::new(sq, ball(1.0)), Err(Error::NotHarmonic { .. })));
    let re = HarmonicPolynomial::new([0.0, 0.0]).with_real(1, 1.0);
    assert!(matches!(
        HarmonicSample::new(re, half_disk([0.0, 0.5], 1.0)),
        Err(Error::BoundaryViolation { .. })
    ));
    let im = HarmonicPolynomial::new([0.0, 0.0]).with_imag(1, 1.0);
    assert!(HarmonicSample::new(im.clone(), half_disk([0.0, -0.1], 1.0)).is_err());
    assert!(HarmonicSample::new(im.clone(), half_disk([0.0, 1.0], 3.5)).is_err());
    let s = HarmonicSample::new(im, half_disk([0.0, 0.5], 2.0)).unwrap();
    assert!(three_ball_check(&s, 0.6, 1.0, 1.5, QuadSpec::default()).is_err());
    assert!(three_ball_check(&s, 0.4, 1.0, 1.5, QuadSpec::default()).is_ok());
    assert!(s.moments(2.0, QuadSpec::default()).is_err());
}

#[test]
fn geometry_json_layout() {
    let g = half_disk([0.1, 0.2], 1.0);
    let v = serde_json::to_value(g).unwrap();
    assert_eq!(v["kind"], "half-disk");
    assert_eq!(v["disk_radius"], 4.0);
    let back: Geometry = serde_json::from_value(v).unwrap();
    assert_eq!(back, g);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interior_frequency_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = HarmonicSample::new(random_interior_polynomial(&mut rng), ball(1.0)).unwrap();
        let radii: Vec<f64> = (1..=12).map(|i| 0.08 * i as f64).collect();
        let p = profile(&s, &radii, QuadSpec::default()).unwrap();
        prop_assert!(monotonicity_check(&p) <= 1e-10 * p.phi.last().unwrap().abs().max(1.0));
        for &r in &[0.2, 0.5, 0.9] {
            let (lhs, rhs) = cauchy_schwarz_check(&s, r, QuadSpec::default()).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-10));
        }
        let tb = three_ball_check(&s, 0.1, 0.3, 0.9, QuadSpec::default()).unwrap();
        prop_assert!(tb.satisfied, "{:?}", tb);
    }

    #[test]
    fn half_disk_three_ball(seed in any::<u64>(), h in 0.0f64..0.8, r1 in 0.05f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_dirichlet_polynomial(&mut rng);
        let c = [poly.center[0], h];
        let s = HarmonicSample::new(poly, half_disk(c, 2.0)).unwrap();
        // Centre on the diameter, or inner ball clear of it.
        let r1 = if h > 0.0 { r1.min(0.9 * h) } else { r1 };
        prop_assume!(r1 > 0.0);
        let tb = three_ball_check(&s, r1, 0.8, 1.6, QuadSpec::default()).unwrap();
        prop_assert!(tb.satisfied, "{:?}", tb);
        let p = profile(&s, &[0.4, 0.8, 1.2, 1.6], QuadSpec::default()).unwrap();
        prop_assert!(p.phi.iter().all(|x| x.is_finite()));
    }
}
