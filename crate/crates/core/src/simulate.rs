//! Sample paths of `dx = A x dt + dw` and the empirical covariance and
//! differential covariance estimators.
//!
//! Trajectory `k` draws its noise from `ChaCha8Rng::seed_from_u64(seed)` with
//! the stream set to `k`, so paths are independent of thread scheduling.

use nalgebra::ComplexField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, expm, skew_part, symmetric_part, Mat};
use crate::model::{solve_lyapunov, sym_sqrt, SystemModel, Tolerances};
use crate::scalar::Real;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `x_{k+1} = x_k + dt·A x_k + √dt·Σ_w^{1/2} η_k`
    #[default]
    EulerMaruyama,
    /// `x_{k+1} = e^{A dt} x_k + Q_d^{1/2} η_k` with `Q_d = Σ − e^{A dt} Σ e^{Aᵀ dt}`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Recorded steps per trajectory after burn-in.
    pub n_steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub n_trajectories: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SimConfig {
    /// Checks `dt·ρ(A) < 0.1` (Euler–Maruyama only) and
    /// `burn_in ≥ 5/(dt·|max Re λ(A)|)`.
    pub fn validate<T: Real>(&self, model: &SystemModel<T>) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.n_steps == 0 || self.n_trajectories == 0 {
            return Err(Error::InvalidConfig("n_steps and n_trajectories must be at least 1".into()));
        }
        let ev = eigenvalues(model.a())?;
        let rho = ev.iter().map(|z| z.modulus().as_f64()).fold(0.0, f64::max);
        let margin = ev.iter().map(|z| z.re.as_f64()).fold(f64::MIN, f64::max);
        if margin >= 0.0 {
            return Err(Error::NotStable { max_real: margin });
        }
        if self.scheme == Scheme::EulerMaruyama && self.dt * rho >= 0.1 {
            return Err(Error::InvalidConfig(format!(
                "dt·ρ(A) = {:.3e} must stay below 0.1",
                self.dt * rho
            )));
        }
        let needed = 5.0 / (self.dt * margin.abs());
        if (self.burn_in as f64) < needed {
            return Err(Error::InvalidConfig(format!(
                "burn_in = {} is shorter than 5 relaxation times ({} steps)",
                self.burn_in,
                needed.ceil()
            )));
        }
        Ok(())
    }

    /// Smallest burn-in that passes [`SimConfig::validate`].
    pub fn minimal_burn_in<T: Real>(model: &SystemModel<T>, dt: f64) -> Result<usize> {
        let margin = eigenvalues(model.a())?
            .iter()
            .map(|z| z.re.as_f64())
            .fold(f64::MIN, f64::max);
        Ok((5.0 / (dt * margin.abs())).ceil() as usize)
    }
}

/// Post-burn-in states of each trajectory, `n_steps + 1` states stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories<T: Real> {
    pub dim: usize,
    pub dt: T,
    pub paths: Vec<Vec<T>>,
}

impl<T: Real> Trajectories<T> {
    pub fn states(&self, k: usize) -> impl Iterator<Item = &[T]> {
        self.paths[k].chunks_exact(self.dim)
    }

    pub fn len(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len() / self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn flatten<T: Real>(m: &Mat<T>) -> Vec<T> {
    // row-major so that row i is contiguous
    m.transpose().as_slice().to_vec()
}

/// Simulates `n_trajectories` independent paths starting at the origin.
pub fn simulate_ou<T: Real>(model: &SystemModel<T>, cfg: &SimConfig, tol: &Tolerances) -> Result<Trajectories<T>> {
    cfg.validate(model)?;
    let n = model.dim();
    let dt = T::lit(cfg.dt);
    let (drift, noise) = match cfg.scheme {
        Scheme::EulerMaruyama => {
            let drift = Mat::<T>::identity(n, n) + model.a() * dt;
            let noise = sym_sqrt(model.sigma_w(), tol)? * dt.sqrt();
            (drift, noise)
        }
        Scheme::Exact => {
            let phi = expm(&(model.a() * dt))?;
            let sigma = solve_lyapunov(model.a(), model.sigma_w(), tol)?;
            let qd = symmetric_part(&(&sigma - &phi * &sigma * phi.transpose()));
            (phi, sym_sqrt(&qd, tol)?)
        }
    };
    let drift = flatten(&drift);
    let noise = flatten(&noise);
    let paths = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let mut x = vec![T::zero(); n];
            let mut next = vec![T::zero(); n];
            let mut eta = vec![T::zero(); n];
            let mut out = Vec::with_capacity((cfg.n_steps + 1) * n);
            let total = cfg.burn_in + cfg.n_steps;
            for step in 0..total {
                if step >= cfg.burn_in {
                    out.extend_from_slice(&x);
                }
                for e in eta.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *e = T::lit(z);
                }
                for i in 0..n {
                    let row = &drift[i * n..(i + 1) * n];
                    let nrow = &noise[i * n..(i + 1) * n];
                    let mut acc = T::zero();
                    for j in 0..n {
                        acc += row[j] * x[j] + nrow[j] * eta[j];
                    }
                    next[i] = acc;
                }
                std::mem::swap(&mut x, &mut next);
            }
            out.extend_from_slice(&x);
            out
        })
        .collect();
    Ok(Trajectories { dim: n, dt, paths })
}

/// `e^{At}x₀`, the noise-free response.
pub fn free_response<T: Real>(a: &Mat<T>, x0: &[T], t: T) -> Result<Vec<T>> {
    let e = expm(&(a * t))?;
    let x = nalgebra::DVector::from_column_slice(x0);
    Ok((e * x).iter().copied().collect())
}

/// Empirical covariance `Σ̂`, differential covariance `DĈ` and skew estimate `Ŝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats<T: Real> {
    pub sigma_hat: Mat<T>,
    /// Time average of `((x_{k+1} − x_k)/dt)·x_kᵀ`.
    pub dc_hat: Mat<T>,
    /// Skew part of `½Σ_w + DĈ`.
    pub s_hat: Mat<T>,
    pub n_samples: usize,
}

/// Minimum number of pooled samples accepted by [`estimate_stats`].
pub const MIN_SAMPLES: usize = 10_000;

/// Pools all trajectories into the stationary estimators.
pub fn estimate_stats<T: Real>(traj: &Trajectories<T>, sigma_w: &Mat<T>) -> Result<EmpiricalStats<T>> {
    let n = traj.dim;
    let pairs_per_path = traj.len().saturating_sub(1);
    let n_samples = pairs_per_path * traj.paths.len();
    if n_samples < MIN_SAMPLES {
        return Err(Error::InsufficientData { samples: n_samples, required: MIN_SAMPLES });
    }
    let mut xx = vec![0.0f64; n * n];
    let mut dx = vec![0.0f64; n * n];
    for path in &traj.paths {
        let states: Vec<&[T]> = path.chunks_exact(n).collect();
        for w in states.windows(2) {
            let (cur, nxt) = (w[0], w[1]);
            for i in 0..n {
                let xi = cur[i].as_f64();
                let di = nxt[i].as_f64() - xi;
                for j in 0..n {
                    let xj = cur[j].as_f64();
                    xx[i * n + j] += xi * xj;
                    dx[i * n + j] += di * xj;
                }
            }
        }
    }
    let count = n_samples as f64;
    let dt = traj.dt.as_f64();
    let sigma_hat = symmetric_part(&Mat::from_row_iterator(n, n, xx.iter().map(|v| T::lit(v / count))));
    let dc_hat = Mat::from_row_iterator(n, n, dx.iter().map(|v| T::lit(v / (count * dt))));
    let s_hat = skew_part(&(sigma_w * T::lit(0.5) + &dc_hat));
    Ok(EmpiricalStats { sigma_hat, dc_hat, s_hat, n_samples })
}

/// `‖DĈ − AΣ̂‖_F / ‖AΣ̂‖_F`.
pub fn dc_identity_residual<T: Real>(stats: &EmpiricalStats<T>, a: &Mat<T>) -> T {
    let a_sigma = a * &stats.sigma_hat;
    (&stats.dc_hat - &a_sigma).norm() / a_sigma.norm()
}
