mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use std::f64::consts::PI;
use wave_control::spectral_basis::{
    enumerate_modes, eval_mode, omega_mass_matrix, project, project_with, MassMatrix, ModeSet, ProjectionRule, Region,
};

#[test]
fn first_three_modes() {
    let ms = enumerate_modes(3).unwrap();
    let got: Vec<(u32, u32, f64)> = ms.modes().iter().map(|m| (m.k, m.l, m.lambda)).collect();
    assert_eq!((got[0].0, got[0].1), (1, 1));
    assert_eq!((got[1].0, got[1].1), (1, 2));
    assert_eq!((got[2].0, got[2].1), (2, 1));
    assert_relative_eq!(got[0].2, 2.0 * PI * PI, max_relative = 1e-15);
    assert_relative_eq!(got[1].2, 5.0 * PI * PI, max_relative = 1e-15);
    assert_eq!(got[1].2, got[2].2);
}

#[test]
fn enumeration_matches_brute_force() {
    for g in [1, 2, 3, 7, 50, 100, 400, 1000] {
        let ms = enumerate_modes(g).unwrap();
        let want = common::brute_force_modes(g);
        let got: Vec<(u32, u32)> = ms.modes().iter().map(|m| (m.k, m.l)).collect();
        assert_eq!(got, want, "G = {g}");
    }
}

#[test]
fn eval_mode_boundary_and_peak_values() {
    let ms = enumerate_modes(10).unwrap();
    let m11 = ms.get(0);
    assert_relative_eq!(eval_mode(m11, 0.5, 0.5), 2.0, max_relative = 1e-15);
    let m21 = ms.get(ms.position(2, 1).unwrap());
    assert_relative_eq!(eval_mode(m21, 0.25, 0.5), 2.0, max_relative = 1e-15);
    for m in ms.modes() {
        assert_eq!(eval_mode(m, 0.0, 0.37), 0.0);
        assert!(eval_mode(m, 1.0, 0.37).abs() < 1e-14);
        assert_eq!(eval_mode(m, 0.61, 0.0), 0.0);
    }
}

#[test]
fn fifth_strip_mass_matrix_matches_quadrature_oracle() {
    let ms = enumerate_modes(50).unwrap();
    let closed = omega_mass_matrix(&ms, Region::fifth_strip());
    let pairs: Vec<(u32, u32)> = ms.modes().iter().map(|m| (m.k, m.l)).collect();
    let oracle = common::mass_matrix_oracle(&pairs, 0.0, 0.2, 24);
    let err = (common::mass_dense(&closed) - &oracle).abs().max();
    assert!(err <= 1e-10, "max entry error {err:e}");
    assert_relative_eq!(closed.get(0, 0), 0.2 - (0.4 * PI).sin() / (2.0 * PI), max_relative = 1e-14);
    assert_relative_eq!(closed.get(0, 0), 0.048634, epsilon = 1e-6);
}

#[test]
fn mass_matrix_eigenvalues_lie_in_unit_interval() {
    let ms = enumerate_modes(50).unwrap();
    for (lo, hi) in [(0.0, 0.2), (0.3, 0.35), (0.1, 0.9), (0.0, 1.0)] {
        let m = omega_mass_matrix(&ms, Region::strip(lo, hi).unwrap());
        let eig = SymmetricEigen::new(common::mass_dense(&m)).eigenvalues;
        assert!(eig.min() >= -1e-12 && eig.max() <= 1.0 + 1e-12, "({lo}, {hi}): {eig}");
    }
    let full = omega_mass_matrix(&ms, Region::FullDomain);
    assert_eq!(common::mass_dense(&full), DMatrix::identity(50, 50));
}

#[test]
fn projection_of_example_two_beam_self_converges() {
    let k_o: f64 = 200.0;
    let (a_o, b_o) = (0.5, 10000.0);
    let g0 = |x1: f64, x2: f64| {
        let (d1, d2) = (x1 - 0.5, x2 - 0.5);
        (-0.5 * k_o * a_o * d1 * d1).exp() * (-0.5 * k_o * b_o * d2 * d2).exp() * (0.5 * k_o * d2).cos()
    };
    let ms = enumerate_modes(100).unwrap();
    let rule = ProjectionRule {
        order: 16,
        panels_x1: 8,
        panels_x2: 256,
    };
    let c = project_with(g0, &ms, &rule).unwrap();
    let c2 = project_with(g0, &ms, &rule.doubled()).unwrap();
    let scale = c2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = c.iter().zip(&c2).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(scale > 0.0 && c.iter().all(|v| v.is_finite()));
    assert!(diff <= 1e-6 * scale, "discrepancy {:e}", diff / scale);

    // Independent reference: the x2 factor of the beam times sin(π l x2)
    // has a closed form (the Gaussian is negligible at x2 = 0, 1), and the
    // x1 factor is a smooth Gaussian integral computed by Golub–Welsch.
    let s2 = 1.0 / (k_o * b_o);
    for (j, m) in ms.modes().iter().enumerate() {
        let l = f64::from(m.l) * PI;
        let w = 0.5 * k_o;
        let x2_part = 0.5
            * (2.0 * PI * s2).sqrt()
            * ((0.5 * l).sin() * ((-(0.5 * s2) * (l - w).powi(2)).exp() + (-(0.5 * s2) * (l + w).powi(2)).exp()));
        let x1_part: f64 = common::golub_welsch(200, 0.0, 1.0)
            .iter()
            .map(|&(x, wt)| wt * (-0.5 * k_o * a_o * (x - 0.5).powi(2)).exp() * (PI * f64::from(m.k) * x).sin())
            .sum();
        let want = 2.0 * x1_part * x2_part;
        assert!((c2[j] - want).abs() <= 1e-9 * scale, "mode {j}: {} vs {want}", c2[j]);
    }
}

#[test]
fn default_panels_do_not_resolve_the_beam() {
    // With the default 8x8 panels the 7e-4-wide x2 envelope falls between
    // nodes and the doubled-order comparison exposes it.
    let g0 = |x1: f64, x2: f64| {
        let (d1, d2) = (x1 - 0.5, x2 - 0.5);
        (-50.0 * d1 * d1).exp() * (-1e6 * d2 * d2).exp() * (100.0 * d2).cos()
    };
    let ms = enumerate_modes(50).unwrap();
    let c = project(g0, &ms, 32).unwrap();
    let c2 = project(g0, &ms, 64).unwrap();
    let scale = c2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = c.iter().zip(&c2).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff > 1e-6 * scale, "discrepancy {:e}", diff / scale);
}

#[test]
fn json_layouts() {
    let ms = enumerate_modes(3).unwrap();
    let v: serde_json::Value = serde_json::to_value(&ms).unwrap();
    let first = &v["modes"][0];
    assert_eq!(first[0], 1);
    assert_eq!(first[1], 1);
    assert!(first[2].as_f64().is_some());
    let back: ModeSet = serde_json::from_value(v).unwrap();
    assert_eq!(back, ms);

    let m = omega_mass_matrix(&ms, Region::fifth_strip());
    let v: serde_json::Value = serde_json::to_value(&m).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 9);
    assert_eq!(entries[1].as_f64().unwrap(), m.get(0, 1));
    let back: MassMatrix = serde_json::from_value(v).unwrap();
    assert_eq!(back.entries(), m.entries());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn enumeration_prefix_property(g in 1usize..300) {
        let short = enumerate_modes(g).unwrap();
        let long = enumerate_modes(g + 10).unwrap();
        prop_assert_eq!(short.modes(), &long.modes()[..g]);
        for w in short.modes().windows(2) {
            prop_assert!((w[0].level(), w[0].k, w[0].l) < (w[1].level(), w[1].k, w[1].l));
        }
    }

    #[test]
    fn strip_mass_matrix_is_symmetric_and_sparse_in_l(lo in 0.0f64..0.9, width in 0.01f64..0.5, g in 1usize..40) {
        let hi = (lo + width).min(1.0);
        let ms = enumerate_modes(g).unwrap();
        let m = omega_mass_matrix(&ms, Region::strip(lo, hi).unwrap());
        for i in 0..g {
            for j in 0..g {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
                if ms.get(i).l != ms.get(j).l {
                    prop_assert_eq!(m.get(i, j), 0.0);
                }
            }
        }
        let x: Vec<f64> = (0..g).map(|i| (i as f64 * 0.7).sin()).collect();
        prop_assert!(m.quadratic_form(&x) >= -1e-14);
    }

    #[test]
    fn projection_inverts_synthesis(coeffs in proptest::collection::vec(-1.0f64..1.0, 12)) {
        let ms = enumerate_modes(12).unwrap();
        let got = project(|x1, x2| ms.synthesize(&coeffs, x1, x2), &ms, 32).unwrap();
        for (a, b) in got.iter().zip(&coeffs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
