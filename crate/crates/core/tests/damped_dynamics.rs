mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wave_control::damped_dynamics::{
    decay_fit, dissipation_residual, fit_power_law, higher_energy_at_zero, observation_window, solve, DampedSystem,
};
use wave_control::experiment::export::{damped_trajectory_table, DampedRunMetadata};
use wave_control::spectral_basis::{enumerate_modes, MassMatrix, Region};
use wave_control::wave_dynamics::{energy, evolve_free, SpectralState};

fn oracle_terminal(sys: &DampedSystem, s0: &SpectralState, t: f64) -> SpectralState {
    let a = common::damped_generator(sys.lambdas(), &common::mass_dense(sys.damping()));
    common::unstack(&common::expm_apply(&a, t, &common::stack(s0)))
}

#[test]
fn matches_matrix_exponential_on_example_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for g in [5, 20, 50] {
        let ms = enumerate_modes(g).unwrap();
        let sys = DampedSystem::assemble(&ms, Region::fifth_strip());
        let s0 = common::smooth_state(&ms, &mut rng);
        let traj = solve(&sys, &s0, 4.0, sys.default_grid_points(4.0), 1e-9).unwrap();
        for (i, t) in [(traj.times().len() / 3), traj.times().len() - 1].map(|i| (i, traj.times()[i])) {
            let err = common::relative_error(&traj.states()[i], &oracle_terminal(&sys, &s0, t));
            assert!(err <= 1e-7, "G = {g}, t = {t}: {err:e}");
        }
    }
}

#[test]
fn full_damping_single_mode_is_underdamped_oscillator() {
    let ms = enumerate_modes(1).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::FullDomain);
    let lambda = ms.get(0).lambda;
    let nu = (lambda - 0.25).sqrt();
    let traj = solve(&sys, &SpectralState::new(vec![1.0], vec![0.0]).unwrap(), 3.0, 301, 1e-11).unwrap();
    for (t, s) in traj.times().iter().zip(traj.states()) {
        // roots -1/2 ± i nu
        let a = (-0.5 * t).exp() * ((nu * t).cos() + 0.5 / nu * (nu * t).sin());
        assert!((s.a[0] - a).abs() < 1e-8, "t = {t}");
    }
}

#[test]
fn zero_damping_reproduces_free_wave() {
    let ms = enumerate_modes(12).unwrap();
    let sys = DampedSystem::with_damping(&ms, MassMatrix::identity(12).scaled(0.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s0 = common::smooth_state(&ms, &mut rng);
    let traj = solve(&sys, &s0, 3.0, 121, 1e-10).unwrap();
    for (t, s) in traj.times().iter().zip(traj.states()) {
        let err = common::relative_error(s, &evolve_free(&ms, &s0, *t));
        assert!(err < 1e-7, "t = {t}: {err:e}");
    }
}

#[test]
fn restarting_matches_a_single_solve() {
    let ms = enumerate_modes(20).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::fifth_strip());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s0 = common::smooth_state(&ms, &mut rng);
    let first = solve(&sys, &s0, 1.5, sys.default_grid_points(1.5), 1e-9).unwrap();
    let second = solve(&sys, first.terminal(), 2.5, sys.default_grid_points(2.5), 1e-9).unwrap();
    let direct = solve(&sys, &s0, 4.0, sys.default_grid_points(4.0), 1e-9).unwrap();
    let err = common::relative_error(second.terminal(), direct.terminal());
    assert!(err <= 2e-7, "{err:e}");
}

#[test]
fn higher_energy_against_finite_differences() {
    let ms = enumerate_modes(1).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::FullDomain);
    let s0 = SpectralState::new(vec![0.0], vec![1.0]).unwrap();
    let lambda = ms.get(0).lambda;
    assert!((higher_energy_at_zero(&sys, &s0).unwrap() - 0.5 * (lambda + 1.0)).abs() < 1e-12);

    // Oracle: acceleration from a second-order one-sided difference of the
    // solver velocity.
    let h = 1e-4;
    let traj = solve(&sys, &s0, 2.0 * h, 3, 1e-13).unwrap();
    let b: Vec<f64> = traj.states().iter().map(|s| s.b[0]).collect();
    let acc = (-3.0 * b[0] + 4.0 * b[1] - b[2]) / (2.0 * h);
    let fd = 0.5 * (lambda * 1.0 + acc * acc);
    assert!((fd - 0.5 * (lambda + 1.0)).abs() < 1e-6 * fd);

    let zero = SpectralState::zeros(1);
    assert_eq!(higher_energy_at_zero(&sys, &zero).unwrap(), 0.0);
    let ms = enumerate_modes(6).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::fifth_strip());
    let a: Vec<f64> = (0..6).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let want: f64 = 0.5 * ms.modes().iter().zip(&a).map(|(m, a)| m.lambda * m.lambda * a * a).sum::<f64>();
    let got = higher_energy_at_zero(&sys, &SpectralState::new(a, vec![0.0; 6]).unwrap()).unwrap();
    assert!((got - want).abs() < 1e-12 * want);
}

#[test]
fn decay_fits() {
    let ts: Vec<f64> = (1..=50).map(|i| i as f64 * 0.2).collect();
    let power: Vec<f64> = ts.iter().map(|t| t.powi(-2)).collect();
    let fit = fit_power_law(&ts, &power).unwrap();
    assert!((fit.delta - 2.0).abs() < 1e-9 && fit.is_power_law(1e-9));

    let ts: Vec<f64> = (0..=90).map(|i| 1.0 + 0.1 * i as f64).collect();
    let expo: Vec<f64> = ts.iter().map(|t| (-t).exp()).collect();
    assert!(!fit_power_law(&ts, &expo).unwrap().is_power_law(1e-2));
    assert!(fit_power_law(&[1.0, 2.0], &[1.0, 0.0]).is_err());

    let ms = enumerate_modes(30).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::fifth_strip());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s0 = common::smooth_state(&ms, &mut rng);
    let traj = solve(&sys, &s0, 20.0, sys.default_grid_points(20.0), 1e-9).unwrap();
    let fit = decay_fit(&traj, &ms, (1.0, 20.0)).unwrap();
    assert!(fit.delta > 0.0 && fit.residual.is_finite(), "{fit:?}");
    assert!(decay_fit(&traj, &ms, (1.0, 30.0)).is_err());
}

#[test]
fn observation_window_is_scale_invariant() {
    let ms = enumerate_modes(10).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::fifth_strip());
    let mut target = SpectralState::zeros(10);
    target.a[0] = 1.0;
    target.a[1] = 1.0;
    target.b[0] = 1.0;
    let w1 = observation_window(&sys, &target, 1.0, 1.0, 1e-9).unwrap();
    let w2 = observation_window(&sys, &target.scaled(3.0), 1.0, 1.0, 1e-9).unwrap();
    assert!((w1.window - w2.window).abs() < 1e-12 * w1.window);
    assert!((w2.observed - 9.0 * w1.observed).abs() < 1e-6 * w2.observed);
    assert!(w1.window.is_finite() && w1.observed > 0.0 && w1.lhs > 0.0);
    assert!(observation_window(&sys, &SpectralState::zeros(10), 1.0, 1.0, 1e-9).is_err());
}

#[test]
fn trajectory_csv_and_metadata() {
    let ms = enumerate_modes(3).unwrap();
    let sys = DampedSystem::assemble(&ms, Region::fifth_strip());
    let s0 = SpectralState::new(vec![1.0, 0.0, 0.5], vec![0.0; 3]).unwrap();
    let traj = solve(&sys, &s0, 1.0, 11, 1e-9).unwrap();
    let t = damped_trajectory_table(&traj, &ms);
    assert_eq!(t.header, ["t", "energy", "a_1", "a_2", "a_3", "b_1", "b_2", "b_3"]);
    assert_eq!(t.rows.len(), 11);
    assert_eq!(t.rows[0][1], energy(&ms, &s0));
    let meta = DampedRunMetadata::new(&traj, Region::fifth_strip());
    let v = serde_json::to_value(&meta).unwrap();
    assert_eq!(v["modes"], 3);
    assert_eq!(v["tol"], 1e-9);
    assert!(v["stats"]["accepted"].as_u64().unwrap() > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dissipation_identity_and_energy_band(seed in any::<u64>(), lo in 0.0f64..0.6, width in 0.05f64..0.4) {
        let ms = enumerate_modes(16).unwrap();
        let region = Region::strip(lo, lo + width).unwrap();
        let sys = DampedSystem::assemble(&ms, region);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = common::smooth_state(&ms, &mut rng);
        let tol = 1e-9;
        let traj = solve(&sys, &s0, 4.0, sys.default_grid_points(4.0), tol).unwrap();
        let e0 = energy(&ms, &s0);
        let r = dissipation_residual(&traj, &sys, 0.0, 4.0).unwrap();
        prop_assert!(r.abs() <= 1e-6 * e0, "residual {:e}", r / e0);
        let r = dissipation_residual(&traj, &sys, 1.3, 2.9).unwrap();
        prop_assert!(r.abs() <= 1e-6 * e0);
        let es = traj.energies(&ms);
        for w in es.windows(2) {
            prop_assert!(w[1] <= w[0] + 10.0 * tol * e0);
        }
    }
}
