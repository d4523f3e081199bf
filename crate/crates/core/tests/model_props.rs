mod common;

use common::{random_fixture, rel_frob};
use covparam::linalg::spectral_abscissa;
use covparam::model::{lyapunov_residual, solve_lyapunov_kronecker, solve_lyapunov_smith};
use covparam::{forward_param, inverse_param, Parametrization64, Tolerances};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_then_inverse_is_identity(seed in any::<u64>(), n in 2usize..=8) {
        let tol = Tolerances::default();
        let f = random_fixture(seed, n);
        let p = Parametrization64::new(f.sigma.clone(), f.s.clone(), f.sigma_w.clone(), &tol).unwrap();
        let m = forward_param(&p, &tol).unwrap();
        let back = inverse_param(&m, &tol).unwrap();
        prop_assert!(rel_frob(back.sigma(), &f.sigma) < 1e-8);
        prop_assert!((back.s() - &f.s).norm() < 1e-8 * (1.0 + f.s.norm()));
    }

    #[test]
    fn forward_output_is_hurwitz(seed in any::<u64>(), n in 2usize..=8, scale in 0.0f64..50.0) {
        let tol = Tolerances::default();
        let f = random_fixture(seed, n);
        let p = Parametrization64::new(f.sigma, f.s * scale, f.sigma_w, &tol).unwrap();
        let m = forward_param(&p, &tol).unwrap();
        prop_assert!(spectral_abscissa(m.a()).unwrap() < 0.0);
    }

    #[test]
    fn two_lyapunov_routes_agree(seed in any::<u64>(), n in 2usize..=10) {
        let tol = Tolerances::default();
        let f = random_fixture(seed, n);
        let p = Parametrization64::new(f.sigma, f.s, f.sigma_w.clone(), &tol).unwrap();
        let a = forward_param(&p, &tol).unwrap().a().clone();
        let x1 = solve_lyapunov_kronecker(&a, &f.sigma_w).unwrap();
        let x2 = solve_lyapunov_smith(&a, &f.sigma_w).unwrap();
        prop_assert!((&x1 - &x2).norm() <= 1e-8 * x1.norm().max(1.0));
        prop_assert!(lyapunov_residual(&a, &x1, &f.sigma_w) < 1e-10);
    }

    #[test]
    fn a_sigma_splits_into_noise_and_skew(seed in any::<u64>(), n in 2usize..=8) {
        let tol = Tolerances::default();
        let f = random_fixture(seed ^ 0x5eed, n);
        let p = Parametrization64::new(f.sigma, f.s, f.sigma_w, &tol).unwrap();
        let m = forward_param(&p, &tol).unwrap();
        let back = inverse_param(&m, &tol).unwrap();
        let lhs = m.a() * back.sigma();
        let rhs = back.sigma_w() * -0.5 + back.s();
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * rhs.norm());
        prop_assert_eq!(back.s() + back.s().transpose(), covparam::Matrix64::zeros(n, n));
    }
}

#[test]
fn smith_route_handles_dimension_above_kronecker_limit() {
    let tol = Tolerances::default();
    let f = random_fixture(17, 70);
    let p = Parametrization64::new(f.sigma.clone(), f.s, f.sigma_w, &tol).unwrap();
    let m = forward_param(&p, &tol).unwrap();
    let back = inverse_param(&m, &tol).unwrap();
    assert!(rel_frob(back.sigma(), &f.sigma) < 1e-8);
}

#[test]
fn single_precision_round_trip() {
    let tol = Tolerances::for_scalar::<f32>();
    let sigma = covparam::Matrix32::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]);
    let s = covparam::Matrix32::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let w = covparam::Matrix32::identity(2, 2) * 2.0;
    let p = covparam::Parametrization32::new(sigma.clone(), s, w, &tol).unwrap();
    let m = forward_param(&p, &tol).unwrap();
    assert!((m.a()[(1, 0)] + 2.0).abs() < 1e-5);
    let back = inverse_param(&m, &tol).unwrap();
    assert!((back.sigma() - sigma).norm() < 1e-5);
}
