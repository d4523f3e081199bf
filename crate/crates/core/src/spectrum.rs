//! Eigenvalue loci of `A(α) = (−½Σ_w + αS̄)Σ⁻¹` and their large-`α` limits.
//!
//! `A(α)` is similar to `−½Q + αK` with `Q = Σ^{-1/2}Σ_wΣ^{-1/2}` and
//! `K = Σ^{-1/2}S̄Σ^{-1/2}`. For large `α` each eigenvalue behaves like
//! `αμ_i − ½u_i*Qu_i` where `(μ_i, u_i)` are the eigenpairs of the real skew
//! matrix `K`.

use nalgebra::{Complex, ComplexField, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, spectral_norm, sym_eigvals, to_complex, Mat};
use crate::model::{sym_inv_sqrt, AlphaFamily, Tolerances};
use crate::scalar::Real;

/// Eigenvalue branches over an ascending `α` grid.
#[derive(Debug, Clone)]
pub struct EigenLocus<T: Real> {
    pub alphas: Vec<T>,
    /// `branches[k][i]` is branch `i` at `alphas[k]`.
    pub branches: Vec<Vec<Complex<T>>>,
    /// Limit of the real part of each branch.
    pub asymptote_re: Vec<T>,
    /// Limit of `Im λ / α` for each branch.
    pub asymptote_im_rate: Vec<T>,
}

/// One row of the sweep CSV.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocusRow {
    pub alpha: f64,
    pub branch_index: usize,
    pub re: f64,
    pub im: f64,
    pub asymptote_re: f64,
    pub asymptote_im_rate: f64,
}

impl<T: Real> EigenLocus<T> {
    pub fn rows(&self) -> Vec<LocusRow> {
        let mut out = Vec::with_capacity(self.alphas.len() * self.asymptote_re.len());
        for (alpha, branch) in self.alphas.iter().zip(&self.branches) {
            for (i, lam) in branch.iter().enumerate() {
                out.push(LocusRow {
                    alpha: alpha.as_f64(),
                    branch_index: i,
                    re: lam.re.as_f64(),
                    im: lam.im.as_f64(),
                    asymptote_re: self.asymptote_re[i].as_f64(),
                    asymptote_im_rate: self.asymptote_im_rate[i].as_f64(),
                });
            }
        }
        out
    }
}

/// Eigenstructure of `K = Σ^{-1/2}S̄Σ^{-1/2}` and the predicted real-part limits.
#[derive(Debug, Clone)]
pub struct AsymptoticReport<T: Real> {
    /// Eigenvalues of `K`, purely imaginary, by descending imaginary part.
    pub mu: Vec<Complex<T>>,
    /// Unit eigenvectors matching `mu`.
    pub u: Vec<DVector<Complex<T>>>,
    /// `−½ u_i* Q u_i`.
    pub re_limits: Vec<T>,
    /// False when two eigenvalues of `K` coincide within tolerance.
    pub simple_spectrum: bool,
}

/// Greedy nearest-neighbour assignment: `result[i]` is the index in `next`
/// paired with `prev[i]`.
///
/// Repeatedly pairs the globally closest unassigned `(prev, next)` couple.
/// Near eigenvalue crossings this can swap branches; refine the grid there.
pub fn match_indices<T: Real>(prev: &[Complex<T>], next: &[Complex<T>]) -> Vec<usize> {
    let n = prev.len();
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(n * next.len());
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((p - q).modulus(), i, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut out = vec![usize::MAX; n];
    let mut used_next = vec![false; next.len()];
    let mut left = n.min(next.len());
    for (_, i, j) in pairs {
        if left == 0 {
            break;
        }
        if out[i] == usize::MAX && !used_next[j] {
            out[i] = j;
            used_next[j] = true;
            left -= 1;
        }
    }
    out
}

/// Reorders `next` to follow the branches of `prev`.
pub fn match_branches<T: Real>(prev: &[Complex<T>], next: &[Complex<T>]) -> Vec<Complex<T>> {
    match_indices(prev, next).into_iter().map(|j| next[j]).collect()
}

fn sorted_eigenvalues<T: Real>(m: &Mat<T>) -> Result<Vec<Complex<T>>> {
    let mut ev = eigenvalues(m)?;
    ev.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

fn check_alpha_grid<T: Real>(alphas: &[T]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("alpha grid is empty".into()));
    }
    if alphas.iter().any(|a| *a < T::zero() || !a.is_finite()) {
        return Err(Error::InvalidInput("alpha values must be finite and nonnegative".into()));
    }
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("alpha grid must be ascending".into()));
    }
    Ok(())
}

/// Eigenvalues of `A(α)` over `alphas`, matched into branches, with each
/// branch tagged by its asymptotic limit.
pub fn eigen_sweep<T: Real>(family: &AlphaFamily<T>, alphas: &[T], tol: &Tolerances) -> Result<EigenLocus<T>> {
    check_alpha_grid(alphas)?;
    let raw: Vec<Vec<Complex<T>>> = alphas
        .par_iter()
        .map(|&a| sorted_eigenvalues(&family.state_matrix(a)))
        .collect::<Result<_>>()?;
    let mut branches: Vec<Vec<Complex<T>>> = Vec::with_capacity(raw.len());
    for ev in raw {
        let next = match branches.last() {
            Some(prev) => match_branches(prev, &ev),
            None => ev,
        };
        branches.push(next);
    }

    let report = asymptotic_limits(family.sigma(), family.sigma_w(), family.s_bar(), tol)?;
    let n = family.dim();
    let alpha_last = *alphas.last().unwrap();
    // Predicted position of each limit branch at the last α.
    let predicted: Vec<Complex<T>> = report
        .mu
        .iter()
        .zip(&report.re_limits)
        .map(|(mu, re)| Complex::new(*re, mu.im * alpha_last))
        .collect();
    let last = branches.last().unwrap();
    let assigned = match_indices(last, &predicted);
    let mut asymptote_re = vec![T::zero(); n];
    let mut asymptote_im_rate = vec![T::zero(); n];
    for (i, &k) in assigned.iter().enumerate() {
        asymptote_re[i] = report.re_limits[k];
        asymptote_im_rate[i] = report.mu[k].im;
    }
    Ok(EigenLocus {
        alphas: alphas.to_vec(),
        branches,
        asymptote_re,
        asymptote_im_rate,
    })
}

/// Eigenpairs of `K = Σ^{-1/2}S̄Σ^{-1/2}` and the limits `−½u_i*Qu_i`.
pub fn asymptotic_limits<T: Real>(
    sigma: &Mat<T>,
    sigma_w: &Mat<T>,
    s_bar: &Mat<T>,
    tol: &Tolerances,
) -> Result<AsymptoticReport<T>> {
    if s_bar.amax() == T::zero() {
        return Err(Error::InvalidInput("S_bar must be nonzero".into()));
    }
    let r = sym_inv_sqrt(sigma, tol)?;
    let k = &r * s_bar * &r;
    let q = to_complex(&(&r * sigma_w * &r));
    // iK is Hermitian; K u = μ u with μ = −i·h for each eigenpair (h, u) of iK.
    let i = Complex::new(T::zero(), T::one());
    let h = to_complex(&k).map(|z| z * i);
    let eig = nalgebra::SymmetricEigen::try_new(h, T::eps(), 10_000).ok_or(Error::EigenFailure)?;
    let n = k.nrows();
    let mut entries: Vec<(Complex<T>, DVector<Complex<T>>)> = (0..n)
        .map(|j| {
            let mu = Complex::new(T::zero(), -eig.eigenvalues[j]);
            let mut u: DVector<Complex<T>> = eig.eigenvectors.column(j).into_owned();
            normalize_phase(&mut u);
            (mu, u)
        })
        .collect();
    entries.sort_by(|a, b| {
        b.0.im
            .partial_cmp(&a.0.im)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1[0].re.partial_cmp(&b.1[0].re).unwrap_or(std::cmp::Ordering::Equal))
    });
    let k_norm = spectral_norm(&k)?;
    let gap_tol = T::lit(tol.match_rel) * k_norm;
    let simple_spectrum = entries.windows(2).all(|w| (w[0].0.im - w[1].0.im).abs() > gap_tol);
    let half = T::lit(-0.5);
    let re_limits = entries
        .iter()
        .map(|(_, u)| (u.adjoint() * &q * u)[(0, 0)].re * half)
        .collect();
    let (mu, u) = entries.into_iter().unzip();
    Ok(AsymptoticReport { mu, u, re_limits, simple_spectrum })
}

/// Unit norm, largest-modulus component real and positive.
fn normalize_phase<T: Real>(u: &mut DVector<Complex<T>>) {
    let norm = u.norm();
    if norm == T::zero() {
        return;
    }
    let (mut best, mut best_abs) = (0, T::zero());
    for (j, z) in u.iter().enumerate() {
        // prefer the earliest component among near-ties
        if z.modulus() > best_abs * (T::one() + T::lit(1e-9)) {
            best = j;
            best_abs = z.modulus();
        }
    }
    let phase = u[best] / Complex::new(u[best].modulus(), T::zero());
    let scale = phase.conj() / Complex::new(norm, T::zero());
    u.apply(|z| *z *= scale);
}

/// Per-`α` trace residuals `|tr A(α) + ½tr(Σ_wΣ⁻¹)|`.
#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub expected_trace: f64,
    pub alphas: Vec<f64>,
    pub traces: Vec<f64>,
    pub residuals: Vec<f64>,
    pub passed: bool,
}

/// Checks that the eigenvalue mean of `A(α)` does not depend on `α`.
pub fn trace_invariant_check<T: Real>(family: &AlphaFamily<T>, alphas: &[T], tol: &Tolerances) -> Result<TraceReport> {
    check_alpha_grid(alphas)?;
    let expected = (family.sigma_w() * family.sigma_inv()).trace() * T::lit(-0.5);
    let mut traces = Vec::with_capacity(alphas.len());
    let mut residuals = Vec::with_capacity(alphas.len());
    let mut passed = true;
    for &alpha in alphas {
        let a = family.state_matrix(alpha);
        let tr = a.trace();
        let res = (tr - expected).abs();
        let bound = T::lit(tol.match_rel) * a.norm().max(T::one());
        passed &= res <= bound;
        traces.push(tr.as_f64());
        residuals.push(res.as_f64());
    }
    Ok(TraceReport {
        expected_trace: expected.as_f64(),
        alphas: alphas.iter().map(|a| a.as_f64()).collect(),
        traces,
        residuals,
        passed,
    })
}

/// `[λ_min, λ_max]` of `−½Σ^{-1/2}Σ_wΣ^{-1/2}`, the band that confines every
/// real part of the spectrum of `A(α)`.
pub fn real_part_band<T: Real>(family: &AlphaFamily<T>, tol: &Tolerances) -> Result<(T, T)> {
    let r = sym_inv_sqrt(family.sigma(), tol)?;
    let m = &r * family.sigma_w() * &r * T::lit(-0.5);
    let ev = sym_eigvals(&m)?;
    Ok((ev[0], ev[ev.len() - 1]))
}

/// Default `α` schedule for limit checks: `{10, 100, 1000}·‖Σ_w‖/‖S̄‖`.
pub fn limit_schedule<T: Real>(family: &AlphaFamily<T>) -> Result<Vec<T>> {
    let scale = family.alpha_scale()?;
    Ok([10.0, 100.0, 1000.0].iter().map(|f| T::lit(*f) * scale).collect())
}

/// Distances of matched branches from their limits at one `α`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitError {
    pub alpha: f64,
    /// `max_i |Re λ_i − re_limit_i|`
    pub re_error: f64,
    /// `max_i |Im λ_i / α − Im μ_i|`
    pub im_rate_error: f64,
}

/// Evaluates how far the spectrum of `A(α)` is from the predicted limits at each `α > 0`.
pub fn limit_errors<T: Real>(family: &AlphaFamily<T>, alphas: &[T], tol: &Tolerances) -> Result<Vec<LimitError>> {
    let report = asymptotic_limits(family.sigma(), family.sigma_w(), family.s_bar(), tol)?;
    alphas
        .iter()
        .map(|&alpha| {
            if alpha <= T::zero() {
                return Err(Error::InvalidInput("limit errors need α > 0".into()));
            }
            let ev = eigenvalues(&family.state_matrix(alpha))?;
            let predicted: Vec<Complex<T>> = report
                .mu
                .iter()
                .zip(&report.re_limits)
                .map(|(mu, re)| Complex::new(*re, mu.im * alpha))
                .collect();
            let matched = match_branches(&predicted, &ev);
            let mut re_error = T::zero();
            let mut im_rate_error = T::zero();
            for (k, lam) in matched.iter().enumerate() {
                re_error = re_error.max((lam.re - report.re_limits[k]).abs());
                im_rate_error = im_rate_error.max((lam.im / alpha - report.mu[k].im).abs());
            }
            Ok(LimitError {
                alpha: alpha.as_f64(),
                re_error: re_error.as_f64(),
                im_rate_error: im_rate_error.as_f64(),
            })
        })
        .collect()
}
