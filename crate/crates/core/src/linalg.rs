//! Dense linear-algebra helpers shared by the solvers.
//!
//! Eigenvalues and singular values are returned in non-increasing order, so
//! index 0 is the largest (λ_1, s_1) and the last entry the smallest.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance on singular values for rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Eigenvalue tolerance (relative to the largest magnitude) below which a
/// negative eigenvalue is treated as rounding noise and clipped to zero.
pub const PSD_CLIP_TOLERANCE: f64 = 1e-12;

pub fn ensure_square(context: &'static str, m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(context, (m.nrows(), m.nrows()), m.shape()));
    }
    Ok(m.nrows())
}

pub fn ensure_shape(context: &'static str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::dims(context, (rows, cols), m.shape()));
    }
    Ok(())
}

pub fn ensure_finite(context: &'static str, m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "{context} has non-finite entries"
        )))
    }
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

pub fn is_diagonal(m: &Matrix) -> bool {
    m.nrows() == m.ncols()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Eigenvalues of the symmetric part of `m`, largest first.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut values: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Singular values, largest first.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut values: Vec<f64> = m.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

pub fn largest_singular_value(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(m: &Matrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Numerical rank with singular values below `RANK_TOLERANCE * s_1` counted as zero.
pub fn rank(m: &Matrix) -> usize {
    let values = singular_values(m);
    let Some(&top) = values.first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

/// Symmetric and Cholesky-factorable.
pub fn is_positive_definite(m: &Matrix) -> bool {
    m.nrows() == m.ncols()
        && m.nrows() > 0
        && is_symmetric(m, 1e-10)
        && m.clone().cholesky().is_some()
        && sym_eigenvalues(m).last().is_some_and(|&l| l > 0.0)
}

pub fn is_positive_semidefinite(m: &Matrix, tol: f64) -> bool {
    if !is_symmetric(m, 1e-10) {
        return false;
    }
    let values = sym_eigenvalues(m);
    let scale = values.first().map_or(0.0, |v| v.abs()).max(1.0);
    values.last().is_none_or(|&l| l >= -tol * scale)
}

/// `[B, AB, A²B, …, Aⁿ⁻¹B]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = Matrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    out
}

/// `[C; CA; CA²; …; CAⁿ⁻¹]`.
pub fn observability_matrix(a: &Matrix, c: &Matrix) -> Matrix {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// Direct sum `diag(P_1, …, P_N)` of possibly rectangular blocks.
pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for block in blocks {
        out.view_mut((r, c), block.shape()).copy_from(block);
        r += block.nrows();
        c += block.ncols();
    }
    out
}

/// A factor `F` with `F·Fᵀ = W` for sampling `N(0, W)`.
///
/// Cholesky is tried first. If it fails, the symmetric eigendecomposition is
/// used and eigenvalues within `PSD_CLIP_TOLERANCE` of zero are clipped; a
/// clearly negative eigenvalue is an error.
pub fn psd_factor(w: &Matrix) -> Result<Matrix> {
    ensure_square("covariance factor", w)?;
    if !is_symmetric(w, 1e-10) {
        return Err(Error::NotPositiveSemidefinite("noise covariance"));
    }
    if let Some(chol) = w.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = symmetrize(w).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let mut factor = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -PSD_CLIP_TOLERANCE * scale {
            return Err(Error::NotPositiveSemidefinite("noise covariance"));
        }
        let root = libm::sqrt(lambda.max(0.0));
        factor.column_mut(j).scale_mut(root);
    }
    Ok(factor)
}

/// Solves `M·X = rhs` for symmetric positive definite `M`.
pub fn spd_solve(context: &'static str, m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let chol = symmetrize(m).cholesky().ok_or(Error::Singular(context))?;
    Ok(chol.solve(rhs))
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| libm::hypot(z.re, z.im))
        .fold(0.0, f64::max)
}

pub fn trace(m: &Matrix) -> f64 {
    m.diagonal().sum()
}

/// `xᵀ·M·x`.
pub fn quadratic_form(m: &Matrix, x: &Vector) -> f64 {
    x.dot(&(m * x))
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
