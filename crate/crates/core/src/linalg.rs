//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Mat<T> = DMatrix<T>;
pub type CMat<T> = DMatrix<Complex<T>>;

const EIG_MAX_ITER: usize = 10_000;

pub(crate) fn ensure_square<T: Real>(m: &Mat<T>, name: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be non-empty and square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_same_dim<T: Real>(m: &Mat<T>, n: usize, name: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn symmetric_part<T: Real>(m: &Mat<T>) -> Mat<T> {
    (m + m.transpose()) * T::lit(0.5)
}

pub fn skew_part<T: Real>(m: &Mat<T>) -> Mat<T> {
    (m - m.transpose()) * T::lit(0.5)
}

/// Largest absolute asymmetry relative to the largest entry.
pub fn asymmetry<T: Real>(m: &Mat<T>) -> T {
    let scale = m.amax();
    if scale == T::zero() {
        return T::zero();
    }
    (m - m.transpose()).amax() / scale
}

/// Largest absolute deviation from skew-symmetry relative to the largest entry.
pub fn skew_defect<T: Real>(m: &Mat<T>) -> T {
    let scale = m.amax();
    if scale == T::zero() {
        return T::zero();
    }
    (m + m.transpose()).amax() / scale
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub fn sym_eigen<T: Real>(m: &Mat<T>) -> Result<(DVector<T>, Mat<T>)> {
    let sym = symmetric_part(m);
    let eig = SymmetricEigen::try_new(sym, T::eps(), EIG_MAX_ITER).ok_or(Error::EigenFailure)?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigvals<T: Real>(m: &Mat<T>) -> Result<Vec<T>> {
    Ok(sym_eigen(m)?.0.iter().copied().collect())
}

/// Eigenvalues of a general real matrix through the real Schur form.
pub fn eigenvalues<T: Real>(m: &Mat<T>) -> Result<Vec<Complex<T>>> {
    let n = m.nrows();
    let schur =
        Schur::try_new(m.clone(), T::eps(), EIG_MAX_ITER.max(100 * n)).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa<T: Real>(m: &Mat<T>) -> Result<T> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(T::min_value().unwrap(), |a, b| a.max(b)))
}

pub fn spectral_radius<T: Real>(m: &Mat<T>) -> Result<T> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.modulus())
        .fold(T::zero(), |a, b| a.max(b)))
}

pub fn singular_values<T: Real>(m: &Mat<T>) -> Result<Vec<T>> {
    let svd = SVD::try_new(m.clone(), false, false, T::eps(), EIG_MAX_ITER).ok_or(Error::EigenFailure)?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

/// Spectral (2-) norm.
pub fn spectral_norm<T: Real>(m: &Mat<T>) -> Result<T> {
    Ok(singular_values(m)?.first().copied().unwrap_or_else(T::zero))
}

/// Checks `m` is symmetric positive definite with
/// `λ_min > floor · λ_max`. Returns the ascending eigenvalues on success.
pub fn check_spd<T: Real>(m: &Mat<T>, name: &str, floor: f64, sym_tol: f64) -> Result<Vec<T>> {
    ensure_square(m, name)?;
    if asymmetry(m) > T::lit(sym_tol) {
        return Err(Error::InvalidParametrization(format!("{name} is not symmetric")));
    }
    let eig = sym_eigvals(m)?;
    let lo = eig[0];
    let hi = *eig.last().unwrap();
    if lo <= T::zero() || hi <= T::zero() {
        return Err(Error::InvalidParametrization(format!(
            "{name} is not positive definite (λ_min = {lo:e})"
        )));
    }
    if lo <= T::lit(floor) * hi {
        return Err(Error::IllConditioned(format!(
            "{name} has condition number {:e} beyond 1/{floor:e}",
            hi / lo
        )));
    }
    Ok(eig)
}

/// Applies `f` to the eigenvalues of a symmetric positive definite matrix.
pub(crate) fn spd_function<T: Real>(m: &Mat<T>, floor: f64, f: impl Fn(T) -> T) -> Result<Mat<T>> {
    let (vals, vecs) = sym_eigen(m)?;
    let hi = vals[vals.len() - 1];
    if vals[0] <= T::lit(floor) * hi || hi <= T::zero() {
        return Err(Error::IllConditioned(format!(
            "eigenvalue {:e} below floor {floor:e} x λ_max",
            vals[0]
        )));
    }
    let d = DMatrix::from_diagonal(&vals.map(f));
    Ok(symmetric_part(&(&vecs * d * vecs.transpose())))
}

pub fn to_complex<T: Real>(m: &Mat<T>) -> CMat<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;
    let n = ensure_square(a, "A")?;
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().fold(T::zero(), |s, x| s + x.abs()))
        .fold(T::zero(), |m, x| m.max(x))
        .as_f64();
    let squarings = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * T::lit(0.5f64.powi(squarings));
    let b = |i: usize| T::lit(B[i]);
    let id = Mat::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::IllConditioned("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}
