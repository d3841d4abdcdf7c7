//! Control and filtering discrete algebraic Riccati equations.
//!
//! Control: `K = AᵀKA − AᵀKB(R + BᵀKB)⁻¹BᵀKA + Q`, gain `L = −(R + BᵀKB)⁻¹BᵀKA`.
//!
//! Filtering: `Σ = AΣAᵀ − AΣCᵀ(CΣCᵀ + V)⁻¹CΣAᵀ + W`, with the a posteriori
//! covariance `Σ̄ = Σ − ΣCᵀ(CΣCᵀ + V)⁻¹CΣ` and Kalman gain `Σ̄CᵀV⁻¹`.
//!
//! Both are solved by fixed-point iteration of the Riccati map, symmetrizing
//! every iterate, until successive iterates differ by less than
//! [`CONVERGENCE_TOLERANCE`] in relative Frobenius norm.

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100_000;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSynthesis {
    /// Stabilizing solution of the control Riccati equation.
    pub k: Matrix,
    /// State-feedback gain `L`, so that `u = L·x̂`.
    pub gain: Matrix,
    pub iterations: usize,
    pub residual: f64,
}

impl ControlSynthesis {
    pub fn closed_loop(&self, a: &Matrix, b: &Matrix) -> Matrix {
        a + b * &self.gain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSynthesis {
    /// Steady-state a priori error covariance `Σ`.
    pub sigma: Matrix,
    /// Steady-state a posteriori error covariance `Σ̄`.
    pub sigma_bar: Matrix,
    /// `Σ̄·Cᵀ·V⁻¹`.
    pub kalman_gain: Matrix,
    pub iterations: usize,
    pub residual: f64,
}

/// Which Riccati equation a residual refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Riccati {
    Control,
    Filter,
}

fn relative_difference(next: &Matrix, current: &Matrix) -> f64 {
    let scale = next.norm().max(current.norm()).max(f64::MIN_POSITIVE);
    (next - current).norm() / scale
}

fn check_control_inputs(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<()> {
    let n = linalg::ensure_square("A", a)?;
    let m = b.ncols();
    linalg::ensure_shape("B", b, n, m)?;
    linalg::ensure_shape("Q", q, n, n)?;
    linalg::ensure_shape("R", r, m, m)?;
    for (name, mat) in [("A", a), ("B", b), ("Q", q), ("R", r)] {
        linalg::ensure_finite(name, mat)?;
    }
    Ok(())
}

fn check_filter_inputs(a: &Matrix, c: &Matrix, w: &Matrix, v: &Matrix) -> Result<()> {
    let n = linalg::ensure_square("A", a)?;
    let p = c.nrows();
    linalg::ensure_shape("C", c, p, n)?;
    linalg::ensure_shape("W", w, n, n)?;
    linalg::ensure_shape("V", v, p, p)?;
    for (name, mat) in [("A", a), ("C", c), ("W", w), ("V", v)] {
        linalg::ensure_finite(name, mat)?;
    }
    Ok(())
}

/// One application of the control Riccati map.
pub fn control_riccati_map(k: &Matrix, a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let at = a.transpose();
    let kb = k * b;
    let s = r + b.transpose() * &kb;
    let bt_k_a = kb.transpose() * a;
    let correction = linalg::spd_solve("R + BᵀKB", &s, &bt_k_a)?;
    Ok(linalg::symmetrize(&(&at * k * a - bt_k_a.transpose() * correction + q)))
}

/// One application of the filtering Riccati map.
pub fn filter_riccati_map(sigma: &Matrix, a: &Matrix, c: &Matrix, w: &Matrix, v: &Matrix) -> Result<Matrix> {
    let posterior = posterior_covariance(sigma, c, v)?;
    Ok(linalg::symmetrize(&(a * posterior * a.transpose() + w)))
}

/// `Σ̄ = Σ − ΣCᵀ(CΣCᵀ + V)⁻¹CΣ`.
pub fn posterior_covariance(sigma: &Matrix, c: &Matrix, v: &Matrix) -> Result<Matrix> {
    let c_sigma = c * sigma;
    let innovation = &c_sigma * c.transpose() + v;
    let correction = linalg::spd_solve("CΣCᵀ + V", &innovation, &c_sigma)?;
    Ok(linalg::symmetrize(&(sigma - c_sigma.transpose() * correction)))
}

/// Relative Frobenius residual `‖F(X) − X‖ / max(‖F(X)‖, ‖X‖)` of a candidate
/// solution. For [`Riccati::Control`] the arguments are `(A, B, Q, R)`, for
/// [`Riccati::Filter`] they are `(A, C, W, V)`.
pub fn dare_residual(
    kind: Riccati,
    candidate: &Matrix,
    a: &Matrix,
    b_or_c: &Matrix,
    q_or_w: &Matrix,
    r_or_v: &Matrix,
) -> Result<f64> {
    let n = a.nrows();
    linalg::ensure_shape("Riccati candidate", candidate, n, n)?;
    let image = match kind {
        Riccati::Control => {
            check_control_inputs(a, b_or_c, q_or_w, r_or_v)?;
            control_riccati_map(candidate, a, b_or_c, q_or_w, r_or_v)?
        }
        Riccati::Filter => {
            check_filter_inputs(a, b_or_c, q_or_w, r_or_v)?;
            filter_riccati_map(candidate, a, b_or_c, q_or_w, r_or_v)?
        }
    };
    Ok(relative_difference(&image, candidate))
}

fn iterate<F>(initial: Matrix, mut map: F) -> Result<(Matrix, usize)>
where
    F: FnMut(&Matrix) -> Result<Matrix>,
{
    let mut current = initial;
    let mut last = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let next = map(&current)?;
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: last,
            });
        }
        last = relative_difference(&next, &current);
        current = next;
        if last < CONVERGENCE_TOLERANCE {
            return Ok((current, iteration));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual: last,
    })
}

/// Solves the control Riccati equation from `K₀ = Q` and forms the gain.
///
/// `Q` and `R` must be positive definite; controllability is the caller's
/// concern (see [`check_controllable`]) and shows up here as non-convergence.
pub fn solve_dare_control(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<ControlSynthesis> {
    check_control_inputs(a, b, q, r)?;
    if !linalg::is_positive_definite(q) {
        return Err(Error::NotPositiveDefinite("Q"));
    }
    if !linalg::is_positive_definite(r) {
        return Err(Error::NotPositiveDefinite("R"));
    }
    let (k, iterations) = iterate(q.clone(), |k| control_riccati_map(k, a, b, q, r))?;
    let gain = control_gain(&k, a, b, r)?;
    let residual = dare_residual(Riccati::Control, &k, a, b, q, r)?;
    Ok(ControlSynthesis {
        k,
        gain,
        iterations,
        residual,
    })
}

/// `L = −(R + BᵀKB)⁻¹BᵀKA`.
pub fn control_gain(k: &Matrix, a: &Matrix, b: &Matrix, r: &Matrix) -> Result<Matrix> {
    let kb = k * b;
    let s = r + b.transpose() * &kb;
    Ok(-linalg::spd_solve("R + BᵀKB", &s, &(kb.transpose() * a))?)
}

/// Solves the filtering Riccati equation from `Σ₀ = W`.
pub fn solve_dare_filter(a: &Matrix, c: &Matrix, w: &Matrix, v: &Matrix) -> Result<FilterSynthesis> {
    solve_dare_filter_from(a, c, w, v, w.clone())
}

/// Same as [`solve_dare_filter`] from a caller-chosen PSD starting point.
pub fn solve_dare_filter_from(
    a: &Matrix,
    c: &Matrix,
    w: &Matrix,
    v: &Matrix,
    initial: Matrix,
) -> Result<FilterSynthesis> {
    check_filter_inputs(a, c, w, v)?;
    linalg::ensure_shape("initial covariance", &initial, a.nrows(), a.nrows())?;
    if !linalg::is_positive_definite(w) {
        return Err(Error::NotPositiveDefinite("W"));
    }
    if !linalg::is_positive_definite(v) {
        return Err(Error::NotPositiveDefinite("V"));
    }
    let (sigma, iterations) = iterate(initial, |s| filter_riccati_map(s, a, c, w, v))?;
    let sigma_bar = posterior_covariance(&sigma, c, v)?;
    let kalman_gain = linalg::spd_solve("V", v, &(c * &sigma_bar))?.transpose();
    let residual = dare_residual(Riccati::Filter, &sigma, a, c, w, v)?;
    Ok(FilterSynthesis {
        sigma,
        sigma_bar,
        kalman_gain,
        iterations,
        residual,
    })
}

/// Rank test on `[B, AB, …, Aⁿ⁻¹B]`.
pub fn check_controllable(a: &Matrix, b: &Matrix) -> Result<()> {
    let n = a.nrows();
    let rank = linalg::rank(&linalg::controllability_matrix(a, b));
    if rank < n {
        return Err(Error::NotControllable { rank, n });
    }
    Ok(())
}

/// Rank test on `[C; CA; …; CAⁿ⁻¹]`; `which` names the output matrix in errors.
pub fn check_observable(a: &Matrix, c: &Matrix, which: &'static str) -> Result<()> {
    let n = a.nrows();
    let rank = linalg::rank(&linalg::observability_matrix(a, c));
    if rank < n {
        return Err(Error::NotObservable { which, rank, n });
    }
    Ok(())
}

/// Observability of `(A, F)` for the cost factor `Q = FᵀF`.
pub fn check_cost_observable(a: &Matrix, q: &Matrix) -> Result<()> {
    let chol = linalg::symmetrize(q)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("Q"))?;
    check_observable(a, &chol.l().transpose(), "F")
}
