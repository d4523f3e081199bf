//! Power spectral density `Φ(iω) = (iωI − A)⁻¹Σ_w(iωI − A)⁻*` and the
//! frequency-domain effects of the skew parameter.

use std::collections::BinaryHeap;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excitability::{check_planar, planar_state_matrix};
use crate::linalg::{eigenvalues, singular_values, spectral_radius, sym_eigvals, to_complex, CMat, Mat};
use crate::model::{solve_lyapunov, AlphaFamily, SystemModel, Tolerances};
use crate::scalar::Real;

/// `Y = (iωI − A)⁻¹L` with `Σ_w = LLᵀ`, so that `Φ(iω) = YY*`.
fn psd_factor<T: Real>(model: &SystemModel<T>, omega: T) -> Result<CMat<T>> {
    let n = model.dim();
    let chol = model
        .sigma_w()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("Sigma_w Cholesky failed".into()))?;
    let mut resolvent = to_complex(model.a()).map(|z| -z);
    for i in 0..n {
        resolvent[(i, i)] += Complex::new(T::zero(), omega);
    }
    let lu = resolvent.lu();
    let y = lu
        .solve(&to_complex(&chol.l()))
        .ok_or_else(|| Error::IllConditioned(format!("iωI − A is singular at ω = {omega}")))?;
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IllConditioned(format!("iωI − A is singular at ω = {omega}")));
    }
    Ok(y)
}

/// The full Hermitian spectral density matrix at `ω`.
pub fn psd_matrix<T: Real>(model: &SystemModel<T>, omega: T) -> Result<CMat<T>> {
    let y = psd_factor(model, omega)?;
    Ok(&y * y.adjoint())
}

/// `tr Φ(iω)`.
pub fn psd_trace<T: Real>(model: &SystemModel<T>, omega: T) -> Result<T> {
    Ok(psd_factor(model, omega)?.iter().fold(T::zero(), |s, z| s + z.norm_sqr()))
}

/// Sampled `tr Φ(iω, α)` over a frequency × scale grid.
#[derive(Debug, Clone)]
pub struct SpectrumTable<T: Real> {
    pub omegas: Vec<T>,
    pub alphas: Vec<T>,
    /// `tr_phi[k][j]` at `alphas[k]`, `omegas[j]`.
    pub tr_phi: Vec<Vec<T>>,
    pub full_phi: Option<Vec<Vec<CMat<T>>>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub alpha: f64,
    pub tr_phi: f64,
}

impl<T: Real> SpectrumTable<T> {
    pub fn rows(&self) -> Vec<SpectrumRow> {
        let mut out = Vec::with_capacity(self.alphas.len() * self.omegas.len());
        for (k, alpha) in self.alphas.iter().enumerate() {
            for (j, omega) in self.omegas.iter().enumerate() {
                out.push(SpectrumRow {
                    omega: omega.as_f64(),
                    alpha: alpha.as_f64(),
                    tr_phi: self.tr_phi[k][j].as_f64(),
                });
            }
        }
        out
    }
}

pub fn spectrum_table<T: Real>(
    family: &AlphaFamily<T>,
    alphas: &[T],
    omegas: &[T],
    keep_full: bool,
) -> Result<SpectrumTable<T>> {
    if alphas.is_empty() || omegas.is_empty() {
        return Err(Error::InvalidInput("frequency and alpha grids must be nonempty".into()));
    }
    let per_alpha: Vec<(Vec<T>, Vec<CMat<T>>)> = alphas
        .par_iter()
        .map(|&alpha| {
            let model = family.model(alpha);
            let mut traces = Vec::with_capacity(omegas.len());
            let mut full = Vec::new();
            for &w in omegas {
                let y = psd_factor(&model, w)?;
                traces.push(y.iter().fold(T::zero(), |s, z| s + z.norm_sqr()));
                if keep_full {
                    full.push(&y * y.adjoint());
                }
            }
            Ok((traces, full))
        })
        .collect::<Result<_>>()?;
    let (tr_phi, full): (Vec<_>, Vec<_>) = per_alpha.into_iter().unzip();
    Ok(SpectrumTable {
        omegas: omegas.to_vec(),
        alphas: alphas.to_vec(),
        tr_phi,
        full_phi: keep_full.then_some(full),
    })
}

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with Kronrod and
// embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993945,
    0.5860872354676911,
    0.4058451513773972,
    0.20778495500789848,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224,
    0.06309209262997856,
    0.10479001032225019,
    0.14065325971552592,
    0.1690047266392679,
    0.19035057806478542,
    0.20443294007529889,
    0.20948214108472782,
];
const WG: [f64; 4] = [
    0.1294849661688697,
    0.27970539148927664,
    0.3818300505051189,
    0.4179591836734694,
];

struct Panel<T: Real> {
    lo: T,
    hi: T,
    value: Mat<T>,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.lo.partial_cmp(&self.lo).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// Gauss–Kronrod 7/15 rule for a matrix-valued integrand.
fn gk15<T: Real>(f: &impl Fn(T) -> Result<Mat<T>>, lo: T, hi: T) -> Result<Panel<T>> {
    let c = (lo + hi) * T::lit(0.5);
    let h = (hi - lo) * T::lit(0.5);
    let fc = f(c)?;
    let mut kron = &fc * T::lit(WGK[7]);
    let mut gauss = &fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let pair = f(c - dx)? + f(c + dx)?;
        kron += &pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += &pair * T::lit(WG[j / 2]);
        }
    }
    let value = kron * h;
    let error = (&value - gauss * h).norm();
    Ok(Panel { lo, hi, value, error })
}

/// Adaptive quadrature settings for [`energy_identity_check`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureConfig {
    /// Truncation frequency; default `max(100·ρ(A), 10·max|Im λ(A)|)`.
    pub omega_max: Option<f64>,
    /// Requested error relative to the integral norm.
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { omega_max: None, rel_tol: 1e-9, max_panels: 50000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub n: usize,
    pub omega_max: f64,
    pub panels: usize,
    pub quadrature_error: f64,
    /// `(1/2π)∫Φ dω` including the `Σ_w/(πΩ)` tail term.
    pub sigma_quad: Vec<Vec<f64>>,
    pub sigma_lyap: Vec<Vec<f64>>,
    /// `‖Σ_quad − Σ_lyap‖_F / ‖Σ_lyap‖_F`
    pub rel_error: f64,
    pub trace_quad: f64,
}

fn to_rows<T: Real>(m: &Mat<T>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
}

/// Integrates the spectral density and compares it with the Lyapunov covariance.
///
/// `Φ(−ω) = conj Φ(ω)`, so `(1/2π)∫_{−Ω}^{Ω}Φ = (1/π)∫_0^Ω Re Φ`. Beyond `Ω`,
/// `Re Φ = Σ_w/ω² + O(ω⁻⁴)`, which contributes `Σ_w/(πΩ)`.
pub fn energy_identity_check<T: Real>(
    model: &SystemModel<T>,
    cfg: &QuadratureConfig,
    tol: &Tolerances,
) -> Result<EnergyReport> {
    model.ensure_stable()?;
    let ev = eigenvalues(model.a())?;
    let rho = spectral_radius(model.a())?;
    let max_im = ev.iter().map(|z| z.im.abs()).fold(T::zero(), |m, x| m.max(x));
    let omega_max = match cfg.omega_max {
        Some(w) if w > 0.0 => T::lit(w),
        Some(_) => return Err(Error::InvalidInput("omega_max must be positive".into())),
        None => (rho * T::lit(100.0)).max(max_im * T::lit(10.0)),
    };
    let integrand = |w: T| -> Result<Mat<T>> { Ok(psd_matrix(model, w)?.map(|z| z.re)) };

    // Breakpoints at the resonance locations and a few decades of ρ.
    let mut cuts: Vec<T> = ev.iter().map(|z| z.im.abs()).filter(|w| *w > T::zero()).collect();
    for f in [0.01, 0.1, 1.0, 10.0] {
        cuts.push(rho * T::lit(f));
    }
    cuts.retain(|w| *w > T::zero() && *w < omega_max);
    cuts.push(T::zero());
    cuts.push(omega_max);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= T::eps() * omega_max);

    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        heap.push(gk15(&integrand, w[0], w[1])?);
    }
    let total = |heap: &BinaryHeap<Panel<T>>| {
        let n = model.dim();
        heap.iter().fold((Mat::<T>::zeros(n, n), T::zero()), |(v, e), p| (v + &p.value, e + p.error))
    };
    let (mut value, mut error) = total(&heap);
    let rel_tol = T::lit(cfg.rel_tol);
    while error > rel_tol * value.norm() {
        if heap.len() >= cfg.max_panels {
            return Err(Error::QuadratureFailure {
                achieved: (error / value.norm()).as_f64(),
                requested: cfg.rel_tol,
            });
        }
        let worst = heap.pop().unwrap();
        let mid = (worst.lo + worst.hi) * T::lit(0.5);
        let left = gk15(&integrand, worst.lo, mid)?;
        let right = gk15(&integrand, mid, worst.hi)?;
        value += &left.value + &right.value - &worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() % 256 == 0 {
            // resum to shed drift from the running updates
            (value, error) = total(&heap);
        }
    }
    (value, error) = total(&heap);
    let inv_pi = T::one() / T::pi();
    let tail = model.sigma_w() / omega_max;
    let sigma_quad = (value + tail) * inv_pi;
    let sigma_lyap = solve_lyapunov(model.a(), model.sigma_w(), tol)?;
    let rel_error = (&sigma_quad - &sigma_lyap).norm() / sigma_lyap.norm();
    Ok(EnergyReport {
        n: model.dim(),
        omega_max: omega_max.as_f64(),
        panels: heap.len(),
        quadrature_error: (error * inv_pi).as_f64(),
        trace_quad: sigma_quad.trace().as_f64(),
        sigma_quad: to_rows(&sigma_quad),
        sigma_lyap: to_rows(&sigma_lyap),
        rel_error: rel_error.as_f64(),
    })
}

/// Settings for [`highpass_checks`].
#[derive(Debug, Clone, Copy)]
pub struct HighpassConfig {
    /// Stand-in for `α → ∞`; default `10³·‖Σ_w‖/‖S̄‖`.
    pub alpha_inf: Option<f64>,
    /// Threshold relative to `tr Φ(0, 0)` for the vanishing-spectrum check.
    pub vanish_rel: f64,
}

impl Default for HighpassConfig {
    fn default() -> Self {
        Self { alpha_inf: None, vanish_rel: 1e-2 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HighpassReport {
    pub alphas: Vec<f64>,
    /// `tr Φ(0, α)` over the grid.
    pub dc_traces: Vec<f64>,
    /// Indices `k` with `tr Φ(0, α_{k+1}) > tr Φ(0, α_k)`.
    pub dc_monotone_violations: Vec<usize>,
    /// Indices `k` where `Φ(0, α_k) − Φ(0, α_{k+1})` is not PSD.
    pub loewner_violations: Vec<usize>,
    pub full_rank: bool,
    pub alpha_inf: f64,
    pub epsilon: f64,
    /// `max_ω tr Φ(iω, α_inf)` over the sampled frequencies, when `S̄` is full rank.
    pub max_trace_at_alpha_inf: Option<f64>,
    pub vanishing_holds: Option<bool>,
    /// Largest sampled `|ω|` below which `tr Φ(iω, 0) > tr Φ(iω, α_inf)` everywhere.
    pub omega_bar: Option<f64>,
}

/// Checks the low-frequency attenuation and vanishing-spectrum statements.
pub fn highpass_checks<T: Real>(
    family: &AlphaFamily<T>,
    alphas: &[T],
    omegas: &[T],
    cfg: &HighpassConfig,
    tol: &Tolerances,
) -> Result<HighpassReport> {
    if alphas.is_empty() || alphas.windows(2).any(|w| w[1] < w[0]) || alphas[0] < T::zero() {
        return Err(Error::InvalidInput("alphas must be ascending and nonnegative".into()));
    }
    let dc: Vec<Mat<T>> = alphas
        .par_iter()
        .map(|&a| Ok(psd_matrix(&family.model(a), T::zero())?.map(|z| z.re)))
        .collect::<Result<_>>()?;
    let dc_traces: Vec<T> = dc.iter().map(|m| m.trace()).collect();
    let slack = T::lit(tol.match_rel);
    let mut dc_monotone_violations = Vec::new();
    let mut loewner_violations = Vec::new();
    for k in 0..dc.len().saturating_sub(1) {
        if dc_traces[k + 1] > dc_traces[k] * (T::one() + slack) {
            dc_monotone_violations.push(k);
        }
        let diff = &dc[k] - &dc[k + 1];
        let min_eig = sym_eigvals(&diff)?[0];
        if min_eig < -slack * dc[k].norm() {
            loewner_violations.push(k);
        }
    }

    let sv = singular_values(family.s_bar())?;
    let full_rank = sv[sv.len() - 1] > T::lit(tol.spd_eig_floor) * sv[0];
    let alpha_inf = match cfg.alpha_inf {
        Some(a) => T::lit(a),
        None => family.alpha_scale()? * T::lit(1e3),
    };
    let dc0 = psd_trace(&family.model(T::zero()), T::zero())?;
    let epsilon = dc0 * T::lit(cfg.vanish_rel);
    let model0 = family.model(T::zero());
    let model_inf = family.model(alpha_inf);
    let pairs: Vec<(T, T, T)> = omegas
        .par_iter()
        .map(|&w| Ok((w.abs(), psd_trace(&model0, w)?, psd_trace(&model_inf, w)?)))
        .collect::<Result<_>>()?;
    let max_inf = pairs.iter().map(|p| p.2).fold(T::zero(), |m, x| m.max(x));

    let mut by_freq = pairs.clone();
    by_freq.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut omega_bar = None;
    for (w, low, high) in by_freq {
        if low > high {
            omega_bar = Some(w.as_f64());
        } else {
            break;
        }
    }

    Ok(HighpassReport {
        alphas: alphas.iter().map(|a| a.as_f64()).collect(),
        dc_traces: dc_traces.iter().map(|t| t.as_f64()).collect(),
        dc_monotone_violations,
        loewner_violations,
        full_rank,
        alpha_inf: alpha_inf.as_f64(),
        epsilon: epsilon.as_f64(),
        max_trace_at_alpha_inf: full_rank.then(|| max_inf.as_f64()),
        vanishing_holds: full_rank.then(|| max_inf < epsilon),
        omega_bar,
    })
}

/// `ζ(α²) = α² + σ⁴/4`.
pub fn zeta(sigma2: f64, alpha: f64) -> f64 {
    alpha * alpha + sigma2 * sigma2 / 4.0
}

/// Denominator `|det(iωI − A)|²` of the planar spectrum.
fn planar_denominator(sigma2: f64, d1: f64, d2: f64, alpha: f64, omega: f64) -> f64 {
    let z = zeta(sigma2, alpha);
    let w2 = omega * omega;
    (w2 - d1 * d2 * z).powi(2) + w2 * sigma2 * sigma2 / 4.0 * (d1 + d2).powi(2)
}

/// Exact planar `tr Φ(iω) = σ²(2ω² + (d1² + d2²)ζ) / |det(iωI − A)|²`.
pub fn planar_trace_psd(sigma2: f64, d1: f64, d2: f64, alpha: f64, omega: f64) -> f64 {
    let z = zeta(sigma2, alpha);
    sigma2 * (2.0 * omega * omega + (d1 * d1 + d2 * d2) * z) / planar_denominator(sigma2, d1, d2, alpha, omega)
}

/// Planar trace with the numerator written as `σ²(2ω² + ζ)`; it differs from
/// [`planar_trace_psd`] unless `d1² + d2² = 1`.
pub fn planar_trace_psd_unweighted(sigma2: f64, d1: f64, d2: f64, alpha: f64, omega: f64) -> f64 {
    let z = zeta(sigma2, alpha);
    sigma2 * (2.0 * omega * omega + z) / planar_denominator(sigma2, d1, d2, alpha, omega)
}

/// Zero-free approximation `σ² / |det(iωI − A)|²` used for resonance analysis.
pub fn planar_trace_psd_approx(sigma2: f64, d1: f64, d2: f64, alpha: f64, omega: f64) -> f64 {
    sigma2 / planar_denominator(sigma2, d1, d2, alpha, omega)
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + lo.abs() + hi.abs()) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Argmax over `ω ≥ 0` of `f` on a uniform grid of `[0, omega_hi]`, refined by
/// golden-section search around the best grid point.
pub fn grid_argmax(f: impl Fn(f64) -> f64, omega_hi: f64, points: usize) -> f64 {
    let step = omega_hi / (points - 1) as f64;
    let mut best = (0usize, f(0.0));
    for k in 1..points {
        let v = f(k as f64 * step);
        if v > best.1 {
            best = (k, v);
        }
    }
    if best.0 == 0 {
        // boundary maximum: refine only inward
        let w = golden_section_max(&f, 0.0, step, 1e-12);
        return if f(w) > best.1 * (1.0 + 1e-12) { w } else { 0.0 };
    }
    let lo = (best.0 - 1) as f64 * step;
    let hi = (best.0 + 1) as f64 * step;
    golden_section_max(f, lo, hi, 1e-12)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResonanceRow {
    pub alpha: f64,
    /// Formula peak of the zero-free approximation, `None` for `α ≤ α_th`.
    pub omega_r_formula: Option<f64>,
    /// Peak of the exact `tr Φ` located numerically.
    pub omega_r_exact_argmax: f64,
    /// Peak of the zero-free approximation located numerically.
    pub omega_r_approx_argmax: f64,
}

/// Resonance of the planar system with `Σ_w = σ²I`, `Σ⁻¹ = diag(d1, d2)`.
#[derive(Debug, Clone, Serialize)]
pub struct Resonance2D {
    pub sigma2: f64,
    pub d1: f64,
    pub d2: f64,
    pub alpha_th: f64,
    pub rows: Vec<ResonanceRow>,
}

impl Resonance2D {
    pub fn zeta(&self, alpha: f64) -> f64 {
        zeta(self.sigma2, alpha)
    }
}

/// `α_th = σ²√(d1² + d2²)/(2√(2d1d2))`.
pub fn resonance_threshold(sigma2: f64, d1: f64, d2: f64) -> f64 {
    sigma2 * (d1 * d1 + d2 * d2).sqrt() / (2.0 * (2.0 * d1 * d2).sqrt())
}

/// `ω_r = √(8d1d2α² − σ⁴(d1² + d2²))/(2√2)` when `α > α_th`.
pub fn resonance_frequency(sigma2: f64, d1: f64, d2: f64, alpha: f64) -> Option<f64> {
    (alpha > resonance_threshold(sigma2, d1, d2)).then(|| {
        (8.0 * d1 * d2 * alpha * alpha - sigma2 * sigma2 * (d1 * d1 + d2 * d2)).sqrt() / (2.0 * 2f64.sqrt())
    })
}

pub fn resonance_2d(sigma2: f64, d1: f64, d2: f64, alphas: &[f64]) -> Result<Resonance2D> {
    check_planar(sigma2, d1, d2)?;
    let rows = alphas
        .iter()
        .map(|&alpha| {
            if alpha < 0.0 {
                return Err(Error::InvalidInput("alpha must be nonnegative".into()));
            }
            let model = SystemModel::from_parts_unchecked(
                planar_state_matrix(sigma2, d1, d2, alpha),
                Mat::<f64>::identity(2, 2) * sigma2,
            );
            let rho = spectral_radius(model.a())?;
            let span = 4.0 * rho.max(1e-12);
            let exact = grid_argmax(|w| psd_trace(&model, w).unwrap_or(f64::NAN), span, 20001);
            let approx = grid_argmax(|w| planar_trace_psd_approx(sigma2, d1, d2, alpha, w), span, 20001);
            Ok(ResonanceRow {
                alpha,
                omega_r_formula: resonance_frequency(sigma2, d1, d2, alpha),
                omega_r_exact_argmax: exact,
                omega_r_approx_argmax: approx,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Resonance2D {
        sigma2,
        d1,
        d2,
        alpha_th: resonance_threshold(sigma2, d1, d2),
        rows,
    })
}
