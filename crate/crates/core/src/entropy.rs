//! Log-det bounds on the steady-state a priori error covariance `Σ`.
//!
//! With diagonal `C` and `V = diag(σ_i²)`:
//!
//! * `γ_i = σ_i² W_ii / (σ_i² + C_ii² W_ii)`, `Γ = diag(γ)`;
//! * `η = s_n²(A)·λ_1(Γ) + λ_n(W)`, and always `λ_1(Σ) ≥ η`;
//! * if `s_1²(A) < 1 + η·min_i C_ii²/σ_i²` then
//!   `Σ ⪯ λ_1(W)/(1 + η λ_n(CᵀV⁻¹C) − s_1²(A))·AAᵀ + W`, and
//! * `log det Σ < λ_1(W)/(1 + η λ_n(CᵀV⁻¹C) − s_1²(A))·Σ s_i²(A) + tr W`.
//!
//! `λ_1`/`s_1` are the largest eigenvalue/singular value, `λ_n`/`s_n` the
//! smallest. `W_ii` is the diagonal of the full network `W`.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix};
use crate::riccati;
use crate::{Error, Result};

/// Everything the bound computation produces, term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyBoundReport {
    pub gamma_diag: Vec<f64>,
    pub eta: f64,
    pub hypothesis_holds: bool,
    /// `1 + η·min C_ii²/σ_i² − s_1²(A)`; positive iff the hypothesis holds.
    pub hypothesis_margin: f64,
    pub logdet_sigma: f64,
    pub lambda_max_sigma: f64,
    /// `η·λ_n(CᵀV⁻¹C)`, the only term that depends on the privacy noise.
    pub privacy_term: f64,
    /// `λ_1(W)/(1 + η λ_n(CᵀV⁻¹C) − s_1²(A))`, when the hypothesis holds.
    pub bound_coefficient: Option<f64>,
    /// `n·log(tr(B)/n)` for the matrix bound `B`, before relaxing `log x < x`.
    pub amgm_bound: Option<f64>,
    /// The final log-det bound.
    pub theorem_bound: Option<f64>,
    /// Homogeneous-case approximation, when `C = I`, `W = ωI` and all σ_i agree.
    pub remark_estimate: Option<f64>,
}

/// `log det M` from a Cholesky factor.
pub fn logdet(m: &Matrix) -> Result<f64> {
    linalg::ensure_square("log-det argument", m)?;
    let chol = linalg::symmetrize(m)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("log-det argument"))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| linalg::ln(*d)).sum::<f64>())
}

struct Terms {
    gamma: Vec<f64>,
    eta: f64,
    /// `λ_n(CᵀV⁻¹C) = min C_ii²/σ_i²`.
    min_precision: f64,
    s1_sq: f64,
    sum_s_sq: f64,
    lambda_max_w: f64,
    trace_w: f64,
}

impl Terms {
    fn margin(&self) -> f64 {
        1.0 + self.eta * self.min_precision - self.s1_sq
    }

    fn coefficient(&self) -> Option<f64> {
        let margin = self.margin();
        (margin > 0.0).then(|| self.lambda_max_w / margin)
    }
}

fn terms(a: &Matrix, w: &Matrix, c: &Matrix, v: &Matrix) -> Result<Terms> {
    let gamma = gamma_diag(w, c, v)?;
    let n = a.nrows();
    linalg::ensure_shape("A", a, n, n)?;
    let s = linalg::singular_values(a);
    let s1_sq = s.first().map_or(0.0, |x| x * x);
    let sn_sq = s.last().map_or(0.0, |x| x * x);
    let w_eig = linalg::sym_eigenvalues(w);
    let lambda_max_w = w_eig[0];
    let lambda_min_w = w_eig[n - 1];
    let gamma_max = gamma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_precision = (0..n)
        .map(|i| c[(i, i)] * c[(i, i)] / v[(i, i)])
        .fold(f64::INFINITY, f64::min);
    Ok(Terms {
        eta: sn_sq * gamma_max + lambda_min_w,
        gamma,
        min_precision,
        s1_sq,
        sum_s_sq: s.iter().map(|x| x * x).sum(),
        lambda_max_w,
        trace_w: linalg::trace(w),
    })
}

fn gamma_diag(w: &Matrix, c: &Matrix, v: &Matrix) -> Result<Vec<f64>> {
    let n = linalg::ensure_square("W", w)?;
    linalg::ensure_shape("C", c, n, n)?;
    linalg::ensure_shape("V", v, n, n)?;
    if !linalg::is_diagonal(c) {
        return Err(Error::NotDiagonal("C"));
    }
    if !linalg::is_diagonal(v) {
        return Err(Error::NotDiagonal("V"));
    }
    if (0..n).any(|i| v[(i, i)].is_nan() || v[(i, i)] <= 0.0) {
        return Err(Error::NotPositiveDefinite("V"));
    }
    if (0..n).any(|i| w[(i, i)].is_nan() || w[(i, i)] <= 0.0) {
        return Err(Error::NotPositiveDefinite("W"));
    }
    Ok((0..n)
        .map(|i| {
            let (s2, wii, cii) = (v[(i, i)], w[(i, i)], c[(i, i)]);
            s2 * wii / (s2 + cii * cii * wii)
        })
        .collect())
}

/// `Γ = diag(γ_1, …, γ_n)`. Requires diagonal `C` and `V`.
pub fn gamma_matrix(w: &Matrix, c: &Matrix, v: &Matrix) -> Result<Matrix> {
    let gamma = gamma_diag(w, c, v)?;
    Ok(Matrix::from_diagonal(&linalg::Vector::from_vec(gamma)))
}

/// Whether the matrix upper bound applies, and its margin
/// `1 + η·min C_ii²/σ_i² − s_1²(A)`.
pub fn lemma4_hypothesis(a: &Matrix, w: &Matrix, c: &Matrix, v: &Matrix) -> Result<(bool, f64)> {
    let t = terms(a, w, c, v)?;
    let margin = t.margin();
    Ok((margin > 0.0, margin))
}

/// `λ_1(W)/(1 + η λ_n(CᵀV⁻¹C) − s_1²(A))·AAᵀ + W`.
pub fn sigma_upper_bound_matrix(a: &Matrix, w: &Matrix, c: &Matrix, v: &Matrix) -> Result<Matrix> {
    let t = terms(a, w, c, v)?;
    let coefficient = t.coefficient().ok_or(Error::HypothesisViolated { margin: t.margin() })?;
    Ok(a * a.transpose() * coefficient + w)
}

/// Full report. The bound fields are `None` when the hypothesis fails; the
/// remaining terms are always filled in.
pub fn entropy_report(a: &Matrix, w: &Matrix, c: &Matrix, v: &Matrix) -> Result<EntropyBoundReport> {
    let t = terms(a, w, c, v)?;
    let filter = riccati::solve_dare_filter(a, c, w, v)?;
    let n = a.nrows();
    let coefficient = t.coefficient();
    let amgm_bound = coefficient.map(|k| {
        let trace = k * t.sum_s_sq + t.trace_w;
        n as f64 * linalg::ln(trace / n as f64)
    });
    Ok(EntropyBoundReport {
        hypothesis_holds: coefficient.is_some(),
        hypothesis_margin: t.margin(),
        logdet_sigma: logdet(&filter.sigma)?,
        lambda_max_sigma: linalg::sym_eigenvalues(&filter.sigma)[0],
        privacy_term: t.eta * t.min_precision,
        bound_coefficient: coefficient,
        amgm_bound,
        theorem_bound: coefficient.map(|k| k * t.sum_s_sq + t.trace_w),
        remark_estimate: homogeneous_parameters(w, c, v).map(|(omega, sigma)| remark1_estimate(a, omega, sigma)),
        eta: t.eta,
        gamma_diag: t.gamma,
    })
}

/// Like [`entropy_report`] but refuses to report when the hypothesis fails.
pub fn theorem1_bound(a: &Matrix, w: &Matrix, c: &Matrix, v: &Matrix) -> Result<EntropyBoundReport> {
    let report = entropy_report(a, w, c, v)?;
    if !report.hypothesis_holds {
        return Err(Error::HypothesisViolated {
            margin: report.hypothesis_margin,
        });
    }
    Ok(report)
}

fn homogeneous_parameters(w: &Matrix, c: &Matrix, v: &Matrix) -> Option<(f64, f64)> {
    let n = w.nrows();
    let omega = w[(0, 0)];
    let variance = v[(0, 0)];
    let homogeneous = *c == Matrix::identity(n, n)
        && *w == Matrix::identity(n, n) * omega
        && (0..n).all(|i| v[(i, i)] == variance);
    homogeneous.then(|| (omega, linalg::sqrt(variance)))
}

/// `(s_n²(A)/(σ² + ω) + 1/σ²)⁻¹·Σ s_i²(A) + nω` for `C = I`, `W = ωI` and a
/// common noise scale `σ`.
pub fn remark1_estimate(a: &Matrix, omega: f64, sigma: f64) -> f64 {
    let n = a.nrows();
    let s = linalg::singular_values(a);
    let sn_sq = s.last().map_or(0.0, |x| x * x);
    let sum_s_sq: f64 = s.iter().map(|x| x * x).sum();
    let s2 = sigma * sigma;
    let first = if s2 == 0.0 {
        0.0
    } else {
        sum_s_sq / (sn_sq / (s2 + omega) + 1.0 / s2)
    };
    first + n as f64 * omega
}
