mod common;

use common::{planar_family, rel_frob};
use covparam::simulate::{dc_identity_residual, estimate_stats, free_response, simulate_ou, Scheme, SimConfig};
use covparam::{Matrix64, SystemModel64, Tolerances};

fn config(seed: u64, n_steps: usize) -> SimConfig {
    SimConfig { dt: 1e-3, n_steps, burn_in: 20_000, seed, n_trajectories: 1, scheme: Scheme::EulerMaruyama }
}

#[test]
fn planar_fixture_recovers_covariance_and_skew() {
    let tol = Tolerances::default();
    let fam = planar_family();
    let model = fam.model(1.0);
    let traj = simulate_ou(&model, &config(7, 2_000_000), &tol).unwrap();
    let stats = estimate_stats(&traj, model.sigma_w()).unwrap();
    assert!(rel_frob(&stats.sigma_hat, fam.sigma()) <= 0.05);
    let s_err = (&stats.s_hat - fam.s_bar()).amax();
    assert!(s_err <= 0.1, "{s_err}");
    assert!(dc_identity_residual(&stats, model.a()) <= 0.05);
    // diagonal noise: off-diagonal entries of the DC and of S coincide
    assert!((stats.dc_hat[(0, 1)] - stats.s_hat[(0, 1)]).abs() <= 0.1);
    assert!((stats.dc_hat[(1, 0)] - stats.s_hat[(1, 0)]).abs() <= 0.1);
}

#[test]
fn reversible_fixture_has_small_skew() {
    let tol = Tolerances::default();
    let model = planar_family().model(0.0);
    let traj = simulate_ou(&model, &config(11, 2_000_000), &tol).unwrap();
    let stats = estimate_stats(&traj, model.sigma_w()).unwrap();
    assert!(stats.s_hat.norm() <= 0.05 * 2f64.sqrt());
}

#[test]
fn isotropic_decay_variance() {
    let tol = Tolerances::default();
    let model = SystemModel64::new_stable(Matrix64::identity(2, 2) * -0.5, Matrix64::identity(2, 2), &tol).unwrap();
    let traj = simulate_ou(&model, &config(3, 2_000_000), &tol).unwrap();
    let stats = estimate_stats(&traj, model.sigma_w()).unwrap();
    let err = rel_frob(&stats.sigma_hat, &Matrix64::identity(2, 2));
    assert!(err <= 0.05, "{err}");
}

#[test]
fn same_seed_gives_identical_statistics() {
    let tol = Tolerances::default();
    let model = planar_family().model(1.0);
    let cfg = SimConfig { n_trajectories: 3, ..config(5, 20_000) };
    let a = simulate_ou(&model, &cfg, &tol).unwrap();
    let b = simulate_ou(&model, &cfg, &tol).unwrap();
    assert_eq!(a.paths, b.paths);
    let sa = estimate_stats(&a, model.sigma_w()).unwrap();
    let sb = estimate_stats(&b, model.sigma_w()).unwrap();
    assert_eq!(sa.sigma_hat, sb.sigma_hat);
    assert_eq!(sa.dc_hat, sb.dc_hat);
}

#[test]
fn estimator_error_shrinks_with_run_length() {
    let tol = Tolerances::default();
    let fam = planar_family();
    let model = fam.model(1.0);
    let rms = |steps: usize| {
        let seeds = 0..6u64;
        let sq: f64 = seeds
            .clone()
            .map(|s| {
                let traj = simulate_ou(&model, &config(100 + s, steps), &tol).unwrap();
                let stats = estimate_stats(&traj, model.sigma_w()).unwrap();
                (&stats.sigma_hat - fam.sigma()).norm_squared()
            })
            .sum();
        (sq / seeds.count() as f64).sqrt()
    };
    let short = rms(200_000);
    let long = rms(2_000_000);
    assert!(short / long > 2.0, "{short} vs {long}");
}

#[test]
fn exact_scheme_matches_stationary_covariance() {
    let tol = Tolerances::default();
    let fam = planar_family();
    let model = fam.model(2.0);
    let cfg = SimConfig { dt: 0.05, n_steps: 400_000, burn_in: 200, scheme: Scheme::Exact, ..config(21, 0) };
    let traj = simulate_ou(&model, &cfg, &tol).unwrap();
    let stats = estimate_stats(&traj, model.sigma_w()).unwrap();
    assert!(rel_frob(&stats.sigma_hat, fam.sigma()) <= 0.05);
}

#[test]
fn guards_reject_bad_configs() {
    let tol = Tolerances::default();
    let model = planar_family().model(1.0);
    let coarse = SimConfig { dt: 0.1, ..config(1, 20_000) };
    assert!(matches!(simulate_ou(&model, &coarse, &tol), Err(covparam::Error::InvalidConfig(_))));
    let short_burn = SimConfig { burn_in: 10, ..config(1, 20_000) };
    assert!(matches!(simulate_ou(&model, &short_burn, &tol), Err(covparam::Error::InvalidConfig(_))));
    let traj = simulate_ou(&model, &config(1, 5_000), &tol).unwrap();
    assert!(matches!(estimate_stats(&traj, model.sigma_w()), Err(covparam::Error::InsufficientData { .. })));
}

#[test]
fn noiseless_response_decays() {
    let a = planar_family().state_matrix(1.0);
    let x = free_response(&a, &[1.0, -1.0], 30.0).unwrap();
    assert!(x.iter().all(|v| v.abs() < 1e-15));
}
