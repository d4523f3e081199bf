//! Random Hurwitz ensembles and statistics of `‖S‖` across groups of state matrices.

use nalgebra::ComplexField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, spectral_norm, Mat};
use crate::model::{inverse_param, SystemModel, Tolerances};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct EnsembleSpec<T: Real> {
    pub n: usize,
    pub count: usize,
    /// Desired `max Re λ(A)`, negative.
    pub target_margin: T,
    /// Desired `max |Im λ(A)|`, nonnegative.
    pub target_imag: T,
    pub seed: u64,
    pub sigma_w: Mat<T>,
}

impl<T: Real> EnsembleSpec<T> {
    pub fn new(n: usize, count: usize, target_margin: T, target_imag: T, seed: u64) -> Self {
        Self {
            n,
            count,
            target_margin,
            target_imag,
            seed,
            sigma_w: Mat::identity(n, n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.count == 0 {
            return Err(Error::InvalidInput("ensemble needs n >= 1 and count >= 1".into()));
        }
        if self.target_margin.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidInput("target_margin must be negative".into()));
        }
        if self.target_imag.partial_cmp(&T::zero()).is_none_or(|o| o.is_lt()) {
            return Err(Error::InvalidInput("target_imag must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Draws `count` Gaussian matrices `B` and maps each to `A = cB + sI` with
/// `c = target_imag / max|Im λ(B)|` (`c = 1` for a real spectrum) and
/// `s = target_margin − c·max Re λ(B)`.
///
/// Matrix `k` uses `ChaCha8Rng::seed_from_u64(seed)` on stream `k`.
pub fn random_stable<T: Real>(spec: &EnsembleSpec<T>, tol: &Tolerances) -> Result<Vec<SystemModel<T>>> {
    spec.validate()?;
    let n = spec.n;
    (0..spec.count)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let b = Mat::<T>::from_fn(n, n, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::lit(z)
            });
            let ev = eigenvalues(&b)?;
            let max_im = ev.iter().map(|z| z.im.abs()).fold(T::zero(), |m, x| m.max(x));
            let max_re = ev.iter().map(|z| z.re).fold(T::min_value().unwrap(), |m, x| m.max(x));
            let imag_floor = T::lit(tol.match_rel) * ev.iter().map(|z| z.modulus()).fold(T::zero(), |m, x| m.max(x));
            let c = if max_im <= imag_floor { T::one() } else { spec.target_imag / max_im };
            let s = spec.target_margin - c * max_re;
            let a = b * c + Mat::identity(n, n) * s;
            SystemModel::new(a, spec.sigma_w.clone(), tol)
        })
        .collect()
}

/// Which matrix norm measures the size of `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    #[default]
    Spectral,
    Frobenius,
}

impl NormKind {
    pub fn apply<T: Real>(self, m: &Mat<T>) -> Result<T> {
        match self {
            NormKind::Spectral => spectral_norm(m),
            NormKind::Frobenius => Ok(m.norm()),
        }
    }
}

/// Box-plot summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SNormReport {
    pub norm: NormKind,
    pub norms: Vec<f64>,
    pub summary: BoxStats,
}

/// `‖S‖` of every state matrix under noise covariance `Σ_w`.
pub fn s_norm_stats<T: Real>(
    matrices: &[Mat<T>],
    sigma_w: &Mat<T>,
    norm: NormKind,
    tol: &Tolerances,
) -> Result<SNormReport> {
    if matrices.is_empty() {
        return Err(Error::InvalidInput("no matrices supplied".into()));
    }
    let norms: Vec<f64> = matrices
        .par_iter()
        .enumerate()
        .map(|(index, a)| {
            let model = SystemModel::new(a.clone(), sigma_w.clone(), tol)?;
            let p = inverse_param(&model, tol).map_err(|e| match e {
                Error::NotStable { max_real } => Error::NotStableAt { index, max_real },
                other => other,
            })?;
            Ok(norm.apply(p.s())?.as_f64())
        })
        .collect::<Result<_>>()?;
    let summary = BoxStats::from_values(&norms).expect("nonempty");
    Ok(SNormReport { norm, norms, summary })
}

/// Side-by-side `‖S‖` statistics for a random ensemble and optional reference matrices.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleComparison {
    pub random: SNormReport,
    pub reference: Option<SNormReport>,
}

pub fn compare_groups<T: Real>(
    random: &[SystemModel<T>],
    reference: Option<&[Mat<T>]>,
    sigma_w: &Mat<T>,
    norm: NormKind,
    tol: &Tolerances,
) -> Result<EnsembleComparison> {
    let random_a: Vec<Mat<T>> = random.iter().map(|m| m.a().clone()).collect();
    Ok(EnsembleComparison {
        random: s_norm_stats(&random_a, sigma_w, norm, tol)?,
        reference: reference.map(|r| s_norm_stats(r, sigma_w, norm, tol)).transpose()?,
    })
}
