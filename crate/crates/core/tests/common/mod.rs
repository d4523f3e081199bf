#![allow(dead_code)]

use covparam::{AlphaFamily64, Matrix64, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Matrix64 {
    Matrix64::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

/// `BBᵀ/n + floor·I`, condition number kept moderate.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Matrix64 {
    let b = gaussian(rng, n);
    &b * b.transpose() / n as f64 + Matrix64::identity(n, n) * floor
}

pub fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> Matrix64 {
    let b = gaussian(rng, n);
    (&b - b.transpose()) * 0.5
}

pub struct Fixture {
    pub sigma: Matrix64,
    pub s: Matrix64,
    pub sigma_w: Matrix64,
}

pub fn random_fixture(seed: u64, n: usize) -> Fixture {
    let mut r = rng(seed);
    Fixture {
        sigma: random_spd(&mut r, n, 0.2),
        s: random_skew(&mut r, n),
        sigma_w: random_spd(&mut r, n, 0.2),
    }
}

pub fn random_family(seed: u64, n: usize) -> AlphaFamily64 {
    let f = random_fixture(seed, n);
    AlphaFamily64::new(f.sigma, f.sigma_w, f.s, &Tolerances::default()).unwrap()
}

/// σ² = 2, d1 = 2, d2 = 1: Σ = diag(0.5, 1), Σ_w = 2I, S̄ = [[0,1],[−1,0]].
pub fn planar_family() -> AlphaFamily64 {
    AlphaFamily64::new(
        Matrix64::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]),
        Matrix64::identity(2, 2) * 2.0,
        Matrix64::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        &Tolerances::default(),
    )
    .unwrap()
}

/// Seeded 4-D family whose `Σ^{-1/2}S̄Σ^{-1/2}` has a simple spectrum.
pub fn fixture_4d() -> AlphaFamily64 {
    let tol = Tolerances::default();
    for seed in 4000.. {
        let fam = random_family(seed, 4);
        let report =
            covparam::spectrum::asymptotic_limits(fam.sigma(), fam.sigma_w(), fam.s_bar(), &tol).unwrap();
        let im: Vec<f64> = report.mu.iter().map(|m| m.im).collect();
        let gap = im.windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min);
        if report.simple_spectrum && gap > 0.2 * im[0].abs() {
            return fam;
        }
    }
    unreachable!()
}

pub fn rel_frob(a: &Matrix64, b: &Matrix64) -> f64 {
    (a - b).norm() / b.norm()
}
