//! Thin dense linear-algebra helpers over `faer`.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;
pub type RMat = Mat<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn adjoint(a: MatRef<'_, C64>) -> CMat {
    a.adjoint().to_owned()
}

/// max |A - A†|
pub fn hermitian_deviation(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn all_finite(a: MatRef<'_, C64>) -> bool {
    (0..a.ncols())
        .all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

pub fn trace(a: MatRef<'_, C64>) -> C64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// (A + A†)/2
pub fn hermitian_part(a: MatRef<'_, C64>) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary whose columns are the eigenvectors.
pub fn eigh(a: MatRef<'_, C64>) -> Result<(Vec<f64>, CMat)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigvalsh(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    let vals = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(vals)
}

/// exp(-i·h·t) for Hermitian `h`.
pub fn expm_hermitian(h: MatRef<'_, C64>, t: f64) -> Result<CMat> {
    let (vals, v) = eigh(h)?;
    let n = vals.len();
    let mut vd = v.clone();
    for (j, lam) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, -lam * t);
        for i in 0..n {
            vd[(i, j)] *= ph;
        }
    }
    Ok(&vd * v.adjoint())
}

/// max |U†U - 1|
pub fn unitarity_deviation(u: MatRef<'_, C64>) -> f64 {
    let p = u.adjoint() * u;
    let n = p.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - target).norm());
        }
    }
    dev
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Symmetric (Löwdin) orthonormalization of the columns of `v`:
/// V (V†V)^{-1/2}. Keeps each column as close as possible to its input.
pub fn lowdin(v: MatRef<'_, C64>) -> Result<CMat> {
    let s = v.adjoint() * v;
    let (vals, w) = eigh(s.as_ref())?;
    if vals.iter().any(|&x| x <= 1e-14) {
        return Err(Error::Eigen("columns are linearly dependent".into()));
    }
    let n = vals.len();
    let mut wd = w.clone();
    for (j, lam) in vals.iter().enumerate() {
        let f = 1.0 / lam.sqrt();
        for i in 0..n {
            wd[(i, j)] *= f;
        }
    }
    let inv_sqrt = &wd * w.adjoint();
    Ok(v * &inv_sqrt)
}

fn norm1_real(a: MatRef<'_, f64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Real matrix exponential by scaling and squaring with a truncated Taylor
/// series on the scaled matrix (‖A/2^s‖₁ ≤ 1/2, 20 terms).
pub fn expm_real(a: MatRef<'_, f64>) -> RMat {
    let n = a.nrows();
    let norm = norm1_real(a);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(squarings as i32);
    let scaled = RMat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut result = RMat::identity(n, n);
    let mut term = RMat::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled;
        let inv_k = 1.0 / k as f64;
        for j in 0..n {
            for i in 0..n {
                term[(i, j)] *= inv_k;
            }
        }
        result = &result + &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// y = A x for a real matrix and vector slice.
pub fn matvec_real(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut y = vec![0.0; n];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}
