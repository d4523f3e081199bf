//! Numerical abscissa `ω(A) = λ_max((A + Aᵀ)/2)` and its linear-in-`α` bounds.
//!
//! Along the family `A(α)` the symmetric part splits as `P + αM` with
//! `P = −¼(Σ_wΣ⁻¹ + Σ⁻¹Σ_w)` and `M = ½(S̄Σ⁻¹ − Σ⁻¹S̄)`, so Weyl's inequality
//! gives `λ_min(P) + αλ_max(M) ≤ ω(A(α)) ≤ λ_max(P) + αλ_max(M)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, sym_eigvals, symmetric_part, Mat};
use crate::model::{AlphaFamily, Tolerances};
use crate::scalar::Real;

/// Initial growth rate of `‖e^{At}‖₂`.
pub fn numerical_abscissa<T: Real>(a: &Mat<T>) -> Result<T> {
    ensure_square(a, "A")?;
    let ev = sym_eigvals(&symmetric_part(a))?;
    Ok(ev[ev.len() - 1])
}

/// `ω(A(α))` with its Weyl bounds over an `α` grid.
#[derive(Debug, Clone)]
pub struct AbscissaSweep<T: Real> {
    pub alphas: Vec<T>,
    pub omega: Vec<T>,
    pub lower_bound: Vec<T>,
    pub upper_bound: Vec<T>,
    /// `(λ_min(P), λ_max(P))`
    pub p_eigs: (T, T),
    pub m_lambda_max: T,
    /// `−λ_min(P)/λ_max(M)`, beyond which `ω > 0` is guaranteed; `None` when `M = 0`.
    pub sufficient_alpha: Option<T>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AbscissaRow {
    pub alpha: f64,
    pub omega: f64,
    pub lower: f64,
    pub upper: f64,
}

impl<T: Real> AbscissaSweep<T> {
    pub fn rows(&self) -> Vec<AbscissaRow> {
        (0..self.alphas.len())
            .map(|k| AbscissaRow {
                alpha: self.alphas[k].as_f64(),
                omega: self.omega[k].as_f64(),
                lower: self.lower_bound[k].as_f64(),
                upper: self.upper_bound[k].as_f64(),
            })
            .collect()
    }

    /// Grid points where the bounds fail by more than `slack`.
    pub fn violations(&self, slack: T) -> Vec<usize> {
        (0..self.alphas.len())
            .filter(|&k| {
                self.omega[k] < self.lower_bound[k] - slack || self.omega[k] > self.upper_bound[k] + slack
            })
            .collect()
    }
}

/// The symmetric matrices `P` and `M` of the split `sym(A(α)) = P + αM`.
pub fn weyl_split<T: Real>(family: &AlphaFamily<T>) -> (Mat<T>, Mat<T>) {
    let w_inv = family.sigma_w() * family.sigma_inv();
    let inv_w = family.sigma_inv() * family.sigma_w();
    let p = (w_inv + inv_w) * T::lit(-0.25);
    let sm = family.s_bar() * family.sigma_inv();
    let ms = family.sigma_inv() * family.s_bar();
    let m = (sm - ms) * T::lit(0.5);
    (symmetric_part(&p), symmetric_part(&m))
}

fn m_is_zero<T: Real>(family: &AlphaFamily<T>, m: &Mat<T>, tol: &Tolerances) -> bool {
    let scale = family.s_bar().amax() * family.sigma_inv().amax();
    m.amax() <= T::lit(tol.match_rel) * scale
}

pub fn abscissa_bounds<T: Real>(family: &AlphaFamily<T>, alphas: &[T], tol: &Tolerances) -> Result<AbscissaSweep<T>> {
    if alphas.iter().any(|a| *a < T::zero()) {
        return Err(Error::InvalidInput("alpha values must be nonnegative".into()));
    }
    let (p, m) = weyl_split(family);
    let pe = sym_eigvals(&p)?;
    let (p_min, p_max) = (pe[0], pe[pe.len() - 1]);
    let m_zero = m_is_zero(family, &m, tol);
    let m_max = if m_zero {
        T::zero()
    } else {
        let me = sym_eigvals(&m)?;
        me[me.len() - 1]
    };
    let omega: Vec<T> = alphas
        .par_iter()
        .map(|&a| numerical_abscissa(&family.state_matrix(a)))
        .collect::<Result<_>>()?;
    Ok(AbscissaSweep {
        alphas: alphas.to_vec(),
        lower_bound: alphas.iter().map(|&a| p_min + a * m_max).collect(),
        upper_bound: alphas.iter().map(|&a| p_max + a * m_max).collect(),
        omega,
        p_eigs: (p_min, p_max),
        m_lambda_max: m_max,
        sufficient_alpha: (!m_zero).then(|| -p_min / m_max),
    })
}

/// Smallest `α ≥ 0` with `ω(A(α)) = 0`, located by bisection on
/// `[0, sufficient_alpha]`; `None` when `M = 0` (never excitable).
pub fn excitability_threshold<T: Real>(family: &AlphaFamily<T>, tol: &Tolerances) -> Result<Option<T>> {
    let sweep = abscissa_bounds(family, &[T::zero()], tol)?;
    let Some(hi) = sweep.sufficient_alpha else {
        return Ok(None);
    };
    let omega = |a: T| numerical_abscissa(&family.state_matrix(a));
    let (mut lo, mut hi) = (T::zero(), hi * (T::one() + T::lit(1e-12)));
    if omega(lo)? >= T::zero() {
        return Ok(Some(lo));
    }
    // ω is convex in α (max of affine functions), so the first crossing is unique.
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if omega(mid)? > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= T::eps() * hi {
            break;
        }
    }
    Ok(Some((lo + hi) * T::lit(0.5)))
}

/// Numerical abscissa of the planar system with `Σ_w = σ²I`,
/// `Σ⁻¹ = diag(d1, d2)`, `S = α[[0,1],[−1,0]]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Abscissa2D {
    /// From a direct eigendecomposition of the symmetric part.
    pub omega: f64,
    /// `−σ²(d1+d2)/4 + √(σ⁴+4α²)(d1−d2)/4`, which agrees with `omega`.
    pub omega_closed_form: f64,
    /// Variant with `√(σ⁴+2α²)` under the root; reported for comparison only.
    pub omega_closed_form_2a2: f64,
    /// `σ²√(d1d2)/(d1−d2)`, `None` when `d1 = d2`.
    pub threshold: Option<f64>,
    /// Large-`α` slope `(d1 − d2)/2`.
    pub slope: f64,
}

pub fn planar_state_matrix<T: Real>(sigma2: T, d1: T, d2: T, alpha: T) -> Mat<T> {
    let h = sigma2 * T::lit(0.5);
    Mat::from_row_slice(2, 2, &[-h * d1, alpha * d2, -alpha * d1, -h * d2])
}

pub(crate) fn check_planar<T: Real>(sigma2: T, d1: T, d2: T) -> Result<()> {
    if !(sigma2 > T::zero() && d2 > T::zero() && d1 >= d2) {
        return Err(Error::InvalidInput("require sigma2 > 0 and d1 >= d2 > 0".into()));
    }
    Ok(())
}

pub fn abscissa_2d_closed_form<T: Real>(sigma2: T, d1: T, d2: T, alpha: T) -> Result<Abscissa2D> {
    check_planar(sigma2, d1, d2)?;
    if alpha < T::zero() {
        return Err(Error::InvalidInput("alpha must be nonnegative".into()));
    }
    let omega = numerical_abscissa(&planar_state_matrix(sigma2, d1, d2, alpha))?.as_f64();
    let (s2, d1, d2, a) = (sigma2.as_f64(), d1.as_f64(), d2.as_f64(), alpha.as_f64());
    let base = -s2 * (d1 + d2) / 4.0;
    Ok(Abscissa2D {
        omega,
        omega_closed_form: base + (s2 * s2 + 4.0 * a * a).sqrt() * (d1 - d2) / 4.0,
        omega_closed_form_2a2: base + (s2 * s2 + 2.0 * a * a).sqrt() * (d1 - d2) / 4.0,
        threshold: (d1 != d2).then(|| s2 * (d1 * d2).sqrt() / (d1 - d2)),
        slope: (d1 - d2) / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m2(d: &[f64]) -> Mat<f64> {
        Mat::from_row_slice(2, 2, d)
    }

    #[test]
    fn abscissa_examples() {
        assert_relative_eq!(numerical_abscissa(&(Mat::<f64>::identity(3, 3) * -0.5)).unwrap(), -0.5);
        assert_relative_eq!(numerical_abscissa(&m2(&[-2.0, 0.0, 0.0, -1.0])).unwrap(), -1.0, epsilon = 1e-15);
        assert_relative_eq!(
            numerical_abscissa(&m2(&[-2.0, 2.0, -4.0, -1.0])).unwrap(),
            (-3.0 + 5f64.sqrt()) / 2.0,
            epsilon = 1e-14
        );
    }

    fn fixture() -> AlphaFamily<f64> {
        AlphaFamily::new(
            m2(&[0.5, 0.0, 0.0, 1.0]),
            Mat::identity(2, 2) * 2.0,
            m2(&[0.0, 1.0, -1.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn planar_bounds() {
        let f = fixture();
        let (p, m) = weyl_split(&f);
        assert_relative_eq!(p, m2(&[-2.0, 0.0, 0.0, -1.0]), epsilon = 1e-15);
        assert_relative_eq!(m, m2(&[0.0, -0.5, -0.5, 0.0]), epsilon = 1e-15);
        let sw = abscissa_bounds(&f, &[0.0, 2.0, 4.0], &Tolerances::default()).unwrap();
        assert_relative_eq!(sw.sufficient_alpha.unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(sw.lower_bound[1], -1.0, epsilon = 1e-14);
        assert_relative_eq!(sw.upper_bound[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(sw.omega[1], (-3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(sw.omega[2], (-3.0 + 17f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert!(sw.omega[2] > 0.0);
        assert!(sw.violations(0.0).is_empty());
    }

    #[test]
    fn equal_scales_never_excitable() {
        let f = AlphaFamily::new(
            Mat::<f64>::identity(2, 2) * 0.7,
            Mat::identity(2, 2) * 1.3,
            m2(&[0.0, 1.0, -1.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        let sw = abscissa_bounds(&f, &[0.0, 1.0, 100.0], &Tolerances::default()).unwrap();
        assert!(sw.sufficient_alpha.is_none());
        assert_eq!(sw.m_lambda_max, 0.0);
        for w in &sw.omega {
            assert_relative_eq!(*w, sw.omega[0], epsilon = 1e-12);
        }
        assert!(excitability_threshold(&f, &Tolerances::default()).unwrap().is_none());
        let cf = abscissa_2d_closed_form(2.0, 1.0, 1.0, 5.0).unwrap();
        assert!(cf.threshold.is_none());
        assert!(cf.omega < 0.0);
    }

    #[test]
    fn planar_closed_form() {
        let c0 = abscissa_2d_closed_form(2.0, 2.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(c0.omega, -1.0, epsilon = 1e-15);
        let th = c0.threshold.unwrap();
        assert_relative_eq!(th, 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        let at = abscissa_2d_closed_form(2.0, 2.0, 1.0, th).unwrap();
        assert!(at.omega.abs() < 1e-10);
        for alpha in [0.3, 1.0, 2.5, 7.0] {
            let c = abscissa_2d_closed_form(2.0, 2.0, 1.0, alpha).unwrap();
            assert_relative_eq!(c.omega, c.omega_closed_form, epsilon = 1e-12);
        }
        let big = abscissa_2d_closed_form(2.0, 2.0, 1.0, 1e6).unwrap();
        assert_relative_eq!(big.omega / 1e6, 0.5, max_relative = 1e-5);
        assert!(abscissa_2d_closed_form(2.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn bisection_threshold_matches_planar_formula() {
        let th = excitability_threshold(&fixture(), &Tolerances::default()).unwrap().unwrap();
        assert_relative_eq!(th, 2.0 * 2f64.sqrt(), epsilon = 1e-9);
    }
}
