//! System model, the covariance/skew parametrization and the Lyapunov solver.
//!
//! A Hurwitz matrix `A` driven by white noise of covariance `Σ_w` has a unique
//! stationary covariance `Σ` with `AΣ + ΣAᵀ + Σ_w = 0`. The map
//! `(Σ, S) ↦ A = (−½Σ_w + S)Σ⁻¹` is a bijection between SPD `Σ`, skew `S`
//! and Hurwitz `A`; [`forward_param`] and [`inverse_param`] implement the two
//! directions.

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_spd, eigenvalues, ensure_same_dim, ensure_square, skew_defect, skew_part, spd_function,
    spectral_abscissa, symmetric_part, Mat,
};
use crate::scalar::Real;

/// Numerical tolerances, all relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// SPD test: `λ_min > spd_eig_floor · λ_max`.
    pub spd_eig_floor: f64,
    /// Accepted relative Lyapunov residual.
    pub lyap_residual: f64,
    /// Accepted relative deviation from (skew-)symmetry on input.
    pub skew_sym: f64,
    /// Relative tolerance for analytic cross-checks.
    pub match_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spd_eig_floor: 1e-10,
            lyap_residual: 1e-10,
            skew_sym: 1e-12,
            match_rel: 1e-8,
        }
    }
}

impl Tolerances {
    /// Defaults widened so that none is below what the scalar type resolves.
    pub fn for_scalar<T: Real>() -> Self {
        let eps = T::eps().as_f64();
        let d = Self::default();
        Self {
            spd_eig_floor: d.spd_eig_floor.max(1e2 * eps),
            lyap_residual: d.lyap_residual.max(1e3 * eps),
            skew_sym: d.skew_sym.max(1e2 * eps),
            match_rel: d.match_rel.max(1e4 * eps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.spd_eig_floor, self.lyap_residual, self.skew_sym, self.match_rel];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput("tolerances must be strictly positive".into()))
        }
    }
}

/// The pair `(A, Σ_w)` of `dx = A x dt + dw`, `E[dw dwᵀ] = Σ_w dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel<T: Real> {
    a: Mat<T>,
    sigma_w: Mat<T>,
}

impl<T: Real> SystemModel<T> {
    /// Builds a model, checking dimensions and that `Σ_w` is SPD.
    pub fn new(a: Mat<T>, sigma_w: Mat<T>, tol: &Tolerances) -> Result<Self> {
        let n = ensure_square(&a, "A")?;
        ensure_same_dim(&sigma_w, n, "Sigma_w")?;
        check_spd(&sigma_w, "Sigma_w", tol.spd_eig_floor, tol.skew_sym)?;
        Ok(Self { a, sigma_w: symmetric_part(&sigma_w) })
    }

    /// Like [`SystemModel::new`] but also requires `A` to be Hurwitz.
    pub fn new_stable(a: Mat<T>, sigma_w: Mat<T>, tol: &Tolerances) -> Result<Self> {
        let m = Self::new(a, sigma_w, tol)?;
        m.ensure_stable()?;
        Ok(m)
    }

    pub(crate) fn from_parts_unchecked(a: Mat<T>, sigma_w: Mat<T>) -> Self {
        Self { a, sigma_w }
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }

    pub fn sigma_w(&self) -> &Mat<T> {
        &self.sigma_w
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn into_parts(self) -> (Mat<T>, Mat<T>) {
        (self.a, self.sigma_w)
    }

    /// Largest real part of the eigenvalues of `A`.
    pub fn stability_margin(&self) -> Result<T> {
        spectral_abscissa(&self.a)
    }

    pub fn ensure_stable(&self) -> Result<()> {
        let max_real = self.stability_margin()?;
        if max_real < T::zero() {
            Ok(())
        } else {
            Err(Error::NotStable { max_real: max_real.as_f64() })
        }
    }
}

/// The triple `(Σ, S, Σ_w)` on the parameter side of the bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct Parametrization<T: Real> {
    sigma: Mat<T>,
    s: Mat<T>,
    sigma_w: Mat<T>,
}

impl<T: Real> Parametrization<T> {
    /// Validates `Σ`, `Σ_w` SPD and `S` skew-symmetric. Inputs are
    /// re-(skew-)symmetrized after the check.
    pub fn new(sigma: Mat<T>, s: Mat<T>, sigma_w: Mat<T>, tol: &Tolerances) -> Result<Self> {
        let n = ensure_square(&sigma, "Sigma")?;
        ensure_same_dim(&s, n, "S")?;
        ensure_same_dim(&sigma_w, n, "Sigma_w")?;
        check_spd(&sigma, "Sigma", tol.spd_eig_floor, tol.skew_sym)?;
        check_spd(&sigma_w, "Sigma_w", tol.spd_eig_floor, tol.skew_sym)?;
        if skew_defect(&s) > T::lit(tol.skew_sym) {
            return Err(Error::InvalidParametrization("S is not skew-symmetric".into()));
        }
        Ok(Self {
            sigma: symmetric_part(&sigma),
            s: skew_part(&s),
            sigma_w: symmetric_part(&sigma_w),
        })
    }

    pub fn sigma(&self) -> &Mat<T> {
        &self.sigma
    }

    pub fn s(&self) -> &Mat<T> {
        &self.s
    }

    pub fn sigma_w(&self) -> &Mat<T> {
        &self.sigma_w
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
}

/// `S = α·S̄` with a fixed nonzero skew direction `S̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSkewFamily<T: Real> {
    s_bar: Mat<T>,
    alpha: T,
}

impl<T: Real> ScaledSkewFamily<T> {
    pub fn new(s_bar: Mat<T>, alpha: T, tol: &Tolerances) -> Result<Self> {
        validate_direction(&s_bar, tol)?;
        if alpha < T::zero() {
            return Err(Error::InvalidInput("alpha must be nonnegative".into()));
        }
        Ok(Self { s_bar: skew_part(&s_bar), alpha })
    }

    pub fn s_bar(&self) -> &Mat<T> {
        &self.s_bar
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn s(&self) -> Mat<T> {
        &self.s_bar * self.alpha
    }
}

fn validate_direction<T: Real>(s_bar: &Mat<T>, tol: &Tolerances) -> Result<()> {
    ensure_square(s_bar, "S_bar")?;
    if s_bar.amax() == T::zero() {
        return Err(Error::InvalidInput("S_bar must be nonzero".into()));
    }
    if skew_defect(s_bar) > T::lit(tol.skew_sym) {
        return Err(Error::InvalidParametrization("S_bar is not skew-symmetric".into()));
    }
    Ok(())
}

/// Fixed `(Σ, Σ_w, S̄)` with the state matrix `A(α) = (−½Σ_w + αS̄)Σ⁻¹`
/// available for any scale `α`.
#[derive(Debug, Clone)]
pub struct AlphaFamily<T: Real> {
    sigma: Mat<T>,
    sigma_w: Mat<T>,
    s_bar: Mat<T>,
    sigma_inv: Mat<T>,
}

impl<T: Real> AlphaFamily<T> {
    pub fn new(sigma: Mat<T>, sigma_w: Mat<T>, s_bar: Mat<T>, tol: &Tolerances) -> Result<Self> {
        validate_direction(&s_bar, tol)?;
        let p = Parametrization::new(sigma, Mat::zeros(s_bar.nrows(), s_bar.ncols()), sigma_w, tol)?;
        ensure_same_dim(&s_bar, p.dim(), "S_bar")?;
        let sigma_inv = spd_inverse(&p.sigma)?;
        Ok(Self {
            sigma: p.sigma,
            sigma_w: p.sigma_w,
            s_bar: skew_part(&s_bar),
            sigma_inv,
        })
    }

    pub fn sigma(&self) -> &Mat<T> {
        &self.sigma
    }

    pub fn sigma_w(&self) -> &Mat<T> {
        &self.sigma_w
    }

    pub fn s_bar(&self) -> &Mat<T> {
        &self.s_bar
    }

    pub fn sigma_inv(&self) -> &Mat<T> {
        &self.sigma_inv
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn state_matrix(&self, alpha: T) -> Mat<T> {
        (&self.sigma_w * T::lit(-0.5) + &self.s_bar * alpha) * &self.sigma_inv
    }

    pub fn model(&self, alpha: T) -> SystemModel<T> {
        SystemModel::from_parts_unchecked(self.state_matrix(alpha), self.sigma_w.clone())
    }

    pub fn parametrization(&self, alpha: T) -> Parametrization<T> {
        Parametrization {
            sigma: self.sigma.clone(),
            s: &self.s_bar * alpha,
            sigma_w: self.sigma_w.clone(),
        }
    }

    /// Natural scale `‖Σ_w‖₂ / ‖S̄‖₂` for dimensionless `α` schedules.
    pub fn alpha_scale(&self) -> Result<T> {
        Ok(crate::linalg::spectral_norm(&self.sigma_w)? / crate::linalg::spectral_norm(&self.s_bar)?)
    }
}

fn spd_inverse<T: Real>(m: &Mat<T>) -> Result<Mat<T>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("Cholesky factorization failed".into()))?;
    Ok(symmetric_part(&chol.inverse()))
}

/// Relative residual `‖AX + XAᵀ + Q‖_F / max(‖Q‖_F, 1)`.
pub fn lyapunov_residual<T: Real>(a: &Mat<T>, x: &Mat<T>, q: &Mat<T>) -> T {
    let r = a * x + x * a.transpose() + q;
    r.norm() / q.norm().max(T::one())
}

/// Largest dimension handled by the Kronecker solve in [`solve_lyapunov`].
pub const KRONECKER_MAX_DIM: usize = 64;

/// Solves `AX + XAᵀ + Q = 0`.
///
/// Uses the vectorized Kronecker system for `n ≤ 64` and Smith's
/// Cayley-transform doubling iteration above that.
pub fn solve_lyapunov<T: Real>(a: &Mat<T>, q: &Mat<T>, tol: &Tolerances) -> Result<Mat<T>> {
    let n = ensure_square(a, "A")?;
    ensure_same_dim(q, n, "Q")?;
    check_lyapunov_gap(a, tol)?;
    let x = if n <= KRONECKER_MAX_DIM {
        solve_lyapunov_kronecker(a, q)?
    } else {
        solve_lyapunov_smith(a, q)?
    };
    let residual = lyapunov_residual(a, &x, q);
    if residual > T::lit(tol.lyap_residual) {
        return Err(Error::SolverFailure {
            residual: residual.as_f64(),
            tolerance: tol.lyap_residual,
        });
    }
    Ok(x)
}

fn check_lyapunov_gap<T: Real>(a: &Mat<T>, tol: &Tolerances) -> Result<()> {
    let ev = eigenvalues(a)?;
    let scale = ev.iter().map(|z| z.modulus()).fold(T::one(), |m, x| m.max(x));
    let mut gap = T::max_value().unwrap();
    for (i, li) in ev.iter().enumerate() {
        for lj in &ev[i..] {
            gap = gap.min((li + lj).modulus());
        }
    }
    if gap <= T::lit(tol.spd_eig_floor) * scale {
        return Err(Error::SingularLyapunov { gap: gap.as_f64() });
    }
    Ok(())
}

/// Kronecker route: `(I ⊗ A + A ⊗ I) vec(X) = −vec(Q)`, with one step of
/// iterative refinement.
pub fn solve_lyapunov_kronecker<T: Real>(a: &Mat<T>, q: &Mat<T>) -> Result<Mat<T>> {
    let n = ensure_square(a, "A")?;
    ensure_same_dim(q, n, "Q")?;
    let nn = n * n;
    // Column-major vec: X[(i, j)] sits at i + n·j.
    let mut k = Mat::<T>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for l in 0..n {
                // (AX)_ij = Σ_l A_il X_lj
                k[(row, l + n * j)] += a[(i, l)];
                // (XAᵀ)_ij = Σ_l X_il A_jl
                k[(row, i + n * l)] += a[(j, l)];
            }
        }
    }
    let lu = k.lu();
    let rhs = DVector::from_iterator(nn, q.iter().map(|v| -*v));
    let singular = || Error::SingularLyapunov { gap: 0.0 };
    let mut x = lu.solve(&rhs).ok_or_else(singular)?;
    let mat = |v: &DVector<T>| Mat::from_column_slice(n, n, v.as_slice());
    let xm = mat(&x);
    let r = -(a * &xm + &xm * a.transpose() + q);
    let rv = DVector::from_column_slice(r.as_slice());
    x += lu.solve(&rv).ok_or_else(singular)?;
    Ok(symmetric_part(&mat(&x)))
}

/// Smith route: Cayley transform to a Stein equation solved by squared
/// doubling. Requires `A` Hurwitz.
pub fn solve_lyapunov_smith<T: Real>(a: &Mat<T>, q: &Mat<T>) -> Result<Mat<T>> {
    let n = ensure_square(a, "A")?;
    ensure_same_dim(q, n, "Q")?;
    let ev = eigenvalues(a)?;
    if ev.iter().any(|z| z.re >= T::zero()) {
        return Err(Error::NotStable {
            max_real: ev.iter().map(|z| z.re.as_f64()).fold(f64::MIN, f64::max),
        });
    }
    // Shift at the geometric mean of the eigenvalue moduli.
    let log_mean = ev.iter().map(|z| z.modulus().ln()).fold(T::zero(), |s, x| s + x) / T::lit(n as f64);
    let p = log_mean.exp();
    let id = Mat::<T>::identity(n, n);
    let lu = (a - &id * p).lu();
    let c = lu
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("A − pI is singular".into()))?;
    let mut b = &c * (a + &id * p);
    let mut x = &c * q * c.transpose() * (T::lit(2.0) * p);
    let scale = x.norm().max(T::lit(f64::MIN_POSITIVE));
    for _ in 0..200 {
        let inc = &b * &x * b.transpose();
        x += &inc;
        if inc.norm() <= T::eps() * scale {
            return Ok(symmetric_part(&x));
        }
        b = &b * &b;
    }
    Err(Error::SolverFailure {
        residual: lyapunov_residual(a, &x, q).as_f64(),
        tolerance: 0.0,
    })
}

/// `Σ^{-1/2}` of a symmetric positive definite matrix.
pub fn sym_inv_sqrt<T: Real>(sigma: &Mat<T>, tol: &Tolerances) -> Result<Mat<T>> {
    check_spd(sigma, "Sigma", tol.spd_eig_floor, tol.skew_sym)?;
    spd_function(sigma, tol.spd_eig_floor, |v| T::one() / v.sqrt())
}

/// `Σ^{1/2}` of a symmetric positive definite matrix.
pub fn sym_sqrt<T: Real>(sigma: &Mat<T>, tol: &Tolerances) -> Result<Mat<T>> {
    check_spd(sigma, "Sigma", tol.spd_eig_floor, tol.skew_sym)?;
    spd_function(sigma, tol.spd_eig_floor, |v| v.sqrt())
}

/// `A = (−½Σ_w + S)Σ⁻¹`.
pub fn forward_param<T: Real>(p: &Parametrization<T>, tol: &Tolerances) -> Result<SystemModel<T>> {
    let sigma_inv = spd_inverse(&p.sigma)?;
    let a = (&p.sigma_w * T::lit(-0.5) + &p.s) * sigma_inv;
    let residual = lyapunov_residual(&a, &p.sigma, &p.sigma_w);
    let rel = residual * p.sigma_w.norm().max(T::one()) / p.sigma_w.norm();
    if rel > T::lit(tol.lyap_residual) {
        return Err(Error::IllConditioned(format!(
            "forward map Lyapunov residual {rel:e} exceeds {:e}",
            tol.lyap_residual
        )));
    }
    let model = SystemModel::from_parts_unchecked(a, p.sigma_w.clone());
    let margin = model.stability_margin()?;
    if margin >= T::zero() {
        return Err(Error::IllConditioned(format!(
            "forward map produced a non-Hurwitz matrix (max real part {margin:e})"
        )));
    }
    Ok(model)
}

/// Recovers `(Σ, S)` from a Hurwitz `A`: `Σ` solves the Lyapunov equation and
/// `S = ½(AΣ − ΣAᵀ)`.
pub fn inverse_param<T: Real>(m: &SystemModel<T>, tol: &Tolerances) -> Result<Parametrization<T>> {
    m.ensure_stable()?;
    let sigma = solve_lyapunov(&m.a, &m.sigma_w, tol)?;
    let s = skew_part(&(&m.a * &sigma));
    Ok(Parametrization { sigma, s, sigma_w: m.sigma_w.clone() })
}

pub fn identity<T: Real>(n: usize) -> Mat<T> {
    DMatrix::identity(n, n)
}
