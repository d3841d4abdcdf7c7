//! The cloud's runtime computation: steady-state Kalman filtering of the
//! privatized outputs and certainty-equivalent feedback `u = L·x̂`.
//!
//! Timing convention: at step `k` the cloud holds the prediction
//! `x̂⁻(k)` (the public mean `E[x(0)]` at `k = 0`), corrects it with the
//! privatized measurement `ȳ(k)`, applies `u(k) = L·x̂(k)` and predicts
//! `x̂⁻(k+1) = A·x̂(k) + B·u(k)`. Chaining predict and correct reproduces the
//! one-step recursion of [`filter_step`].

use crate::linalg::{self, Matrix, Vector};
use crate::riccati::FilterSynthesis;
use crate::{Error, Result};

/// Current estimate `x̂(k)` and its time index.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub x_hat: Vector,
    pub k: u64,
}

impl EstimatorState {
    pub fn new(x_hat: Vector) -> Result<Self> {
        if !x_hat.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("estimate has non-finite entries".into()));
        }
        Ok(Self { x_hat, k: 0 })
    }
}

fn ensure_vec(context: &'static str, v: &Vector, len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::len(context, len, v.len()));
    }
    Ok(())
}

/// `u*(k) = L·x̂(k)`.
pub fn control(est: &EstimatorState, gain: &Matrix) -> Result<Vector> {
    ensure_vec("estimate", &est.x_hat, gain.ncols())?;
    Ok(gain * &est.x_hat)
}

/// `x̂(k+1) = (A+BL)·x̂(k) + Σ̄CᵀV⁻¹·(ȳ(k+1) − C·(A+BL)·x̂(k))`.
pub fn filter_step(
    est: &EstimatorState,
    y_bar_next: &Vector,
    synthesis: &FilterSynthesis,
    closed_loop: &Matrix,
    c: &Matrix,
) -> Result<EstimatorState> {
    let n = est.x_hat.len();
    linalg::ensure_shape("closed-loop matrix", closed_loop, n, n)?;
    linalg::ensure_shape("C", c, y_bar_next.len(), n)?;
    linalg::ensure_shape("Kalman gain", &synthesis.kalman_gain, n, c.nrows())?;
    let predicted = closed_loop * &est.x_hat;
    Ok(EstimatorState {
        x_hat: correct(&predicted, y_bar_next, &synthesis.kalman_gain, c),
        k: est.k + 1,
    })
}

fn correct(predicted: &Vector, y_bar: &Vector, kalman_gain: &Matrix, c: &Matrix) -> Vector {
    predicted + kalman_gain * (y_bar - c * predicted)
}

/// Stage cost `xᵀQx + uᵀRu`.
pub fn incremental_cost(x: &Vector, u: &Vector, q: &Matrix, r: &Matrix) -> Result<f64> {
    linalg::ensure_shape("Q", q, x.len(), x.len())?;
    linalg::ensure_shape("R", r, u.len(), u.len())?;
    Ok(linalg::quadratic_form(q, x) + linalg::quadratic_form(r, u))
}

/// Mean of the first `k` stage costs.
pub fn moving_average_cost(costs: &[f64], k: usize) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::InvalidParameter("empty cost trace".into()));
    }
    if k == 0 || k > costs.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "moving-average index {k} outside 1..={}",
            costs.len()
        )));
    }
    Ok(costs[..k].iter().sum::<f64>() / k as f64)
}

/// Steady-state predictor/corrector as run by the cloud, and by anyone else
/// holding the public model and the wire log.
#[derive(Debug, Clone)]
pub struct SteadyStateFilter {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    kalman_gain: Matrix,
    prediction: Vector,
    k: u64,
}

impl SteadyStateFilter {
    pub fn new(a: &Matrix, b: &Matrix, c: &Matrix, kalman_gain: &Matrix, initial_mean: &Vector) -> Result<Self> {
        let n = linalg::ensure_square("A", a)?;
        linalg::ensure_shape("B", b, n, b.ncols())?;
        linalg::ensure_shape("C", c, c.nrows(), n)?;
        linalg::ensure_shape("Kalman gain", kalman_gain, n, c.nrows())?;
        ensure_vec("initial mean", initial_mean, n)?;
        Ok(Self {
            a: a.clone(),
            b: b.clone(),
            c: c.clone(),
            kalman_gain: kalman_gain.clone(),
            prediction: initial_mean.clone(),
            k: 0,
        })
    }

    /// `x̂⁻(k)`.
    pub fn prediction(&self) -> &Vector {
        &self.prediction
    }

    pub fn step_index(&self) -> u64 {
        self.k
    }

    /// Corrects the current prediction with `ȳ(k)`.
    pub fn update(&self, y_bar: &Vector) -> Result<EstimatorState> {
        ensure_vec("privatized output", y_bar, self.c.nrows())?;
        Ok(EstimatorState {
            x_hat: correct(&self.prediction, y_bar, &self.kalman_gain, &self.c),
            k: self.k,
        })
    }

    /// Moves to `k + 1` with `x̂⁻(k+1) = A·x̂(k) + B·u(k)`.
    pub fn advance(&mut self, est: &EstimatorState, u: &Vector) -> Result<()> {
        ensure_vec("estimate", &est.x_hat, self.a.nrows())?;
        ensure_vec("control", u, self.b.ncols())?;
        self.prediction = &self.a * &est.x_hat + &self.b * u;
        self.k += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::{solve_dare_control, solve_dare_filter};
    use crate::rng::GaussianStream;
    use alloc::vec;
    use alloc::vec::Vec;

    fn scalar(x: f64) -> Matrix {
        Matrix::from_element(1, 1, x)
    }

    fn v1(x: f64) -> Vector {
        Vector::from_vec(vec![x])
    }

    #[test]
    fn control_examples() {
        let gain = Matrix::from_row_slice(1, 2, &[-0.3, 0.2]);
        let zero = EstimatorState::new(Vector::zeros(2)).unwrap();
        assert_eq!(control(&zero, &gain).unwrap(), Vector::zeros(1));

        let l = scalar(-0.6180);
        let est = EstimatorState::new(v1(2.0)).unwrap();
        assert!((control(&est, &l).unwrap()[0] + 1.2360).abs() < 1e-12);

        assert!(control(&zero, &scalar(1.0)).is_err());
    }

    #[test]
    fn gain_does_not_see_privacy_noise() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let w = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let ctrl = solve_dare_control(&a, &b, &Matrix::identity(2, 2), &scalar(1.0)).unwrap();
        let c = Matrix::identity(2, 2);
        let f1 = solve_dare_filter(&a, &c, &w, &Matrix::identity(2, 2)).unwrap();
        let f2 = solve_dare_filter(&a, &c, &w, &(Matrix::identity(2, 2) * 100.0)).unwrap();
        assert_ne!(f1.kalman_gain, f2.kalman_gain);
        let est = EstimatorState::new(Vector::from_vec(vec![0.7, -1.1])).unwrap();
        let u = control(&est, &ctrl.gain).unwrap();
        assert_eq!(u, control(&est, &ctrl.gain).unwrap());
    }

    #[test]
    fn zero_innovation_is_pure_prediction() {
        let f = solve_dare_filter(&scalar(0.9), &scalar(2.0), &scalar(1.0), &scalar(0.5)).unwrap();
        let closed = scalar(0.6);
        let est = EstimatorState::new(v1(3.0)).unwrap();
        let y = v1(2.0 * 0.6 * 3.0);
        let next = filter_step(&est, &y, &f, &closed, &scalar(2.0)).unwrap();
        assert!((next.x_hat[0] - 1.8).abs() < 1e-15);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn scalar_golden_gain_correction() {
        let f = solve_dare_filter(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        let est = EstimatorState::new(v1(0.0)).unwrap();
        let next = filter_step(&est, &v1(1.0), &f, &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((next.x_hat[0] - 0.618_033_988_749_895).abs() < 1e-9);
    }

    #[test]
    fn filter_step_superposes() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let w = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let c = Matrix::identity(2, 2);
        let f = solve_dare_filter(&a, &c, &w, &(Matrix::identity(2, 2) * 4.0)).unwrap();
        let closed = Matrix::from_row_slice(2, 2, &[0.9, 0.1, -0.3, 0.5]);
        let e1 = EstimatorState::new(Vector::from_vec(vec![1.0, 2.0])).unwrap();
        let e2 = EstimatorState::new(Vector::from_vec(vec![-0.5, 0.25])).unwrap();
        let y1 = Vector::from_vec(vec![0.3, 0.1]);
        let y2 = Vector::from_vec(vec![-2.0, 1.0]);
        let (alpha, beta) = (1.5, -0.75);
        let mixed = EstimatorState::new(&e1.x_hat * alpha + &e2.x_hat * beta).unwrap();
        let lhs = filter_step(&mixed, &(&y1 * alpha + &y2 * beta), &f, &closed, &c).unwrap();
        let r1 = filter_step(&e1, &y1, &f, &closed, &c).unwrap();
        let r2 = filter_step(&e2, &y2, &f, &closed, &c).unwrap();
        assert!((lhs.x_hat - (r1.x_hat * alpha + r2.x_hat * beta)).amax() < 1e-12);
    }

    #[test]
    fn cost_examples() {
        let q = Matrix::identity(2, 2);
        let r = scalar(1.0);
        assert_eq!(incremental_cost(&Vector::zeros(2), &Vector::zeros(1), &q, &r).unwrap(), 0.0);
        let x = Vector::from_vec(vec![1.0, 1.0]);
        assert_eq!(incremental_cost(&x, &v1(2.0), &q, &r).unwrap(), 6.0);
        let q2 = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let base = incremental_cost(&x, &Vector::zeros(1), &q2, &r).unwrap();
        let scaled = incremental_cost(&(&x * 3.0), &Vector::zeros(1), &q2, &r).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-12);
        assert!(incremental_cost(&x, &v1(1.0), &scalar(1.0), &r).is_err());
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average_cost(&[2.5; 7], 5).unwrap(), 2.5);
        assert_eq!(moving_average_cost(&[2.0, 4.0], 2).unwrap(), 3.0);
        assert!(moving_average_cost(&[], 1).is_err());
        assert!(moving_average_cost(&[1.0], 0).is_err());
        assert!(moving_average_cost(&[1.0], 2).is_err());
    }

    #[test]
    fn chained_predict_correct_matches_filter_step() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = Matrix::identity(2, 2);
        let w = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let ctrl = solve_dare_control(&a, &b, &Matrix::identity(2, 2), &scalar(1.0)).unwrap();
        let f = solve_dare_filter(&a, &c, &w, &(Matrix::identity(2, 2) * 9.0)).unwrap();
        let closed = ctrl.closed_loop(&a, &b);
        let mut filter = SteadyStateFilter::new(&a, &b, &c, &f.kalman_gain, &Vector::zeros(2)).unwrap();
        let mut stream = GaussianStream::new(5);
        let mut est = filter.update(&stream.standard_normal_vector(2)).unwrap();
        for _ in 0..50 {
            let u = control(&est, &ctrl.gain).unwrap();
            filter.advance(&est, &u).unwrap();
            let y = stream.standard_normal_vector(2);
            let via_step = filter_step(&est, &y, &f, &closed, &c).unwrap();
            est = filter.update(&y).unwrap();
            assert_eq!(via_step.k, est.k);
            assert!((via_step.x_hat - &est.x_hat).amax() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_prediction_error_matches_riccati() {
        // Scalar closed loop: x⁺ = a x + b u + w, ȳ = c x + v.
        let (a, b, c, w, v) = (0.95, 1.0, 1.0, 1.0, 4.0);
        let ctrl = solve_dare_control(&scalar(a), &scalar(b), &scalar(1.0), &scalar(1.0)).unwrap();
        let f = solve_dare_filter(&scalar(a), &scalar(c), &scalar(w), &scalar(v)).unwrap();
        let sigma = f.sigma[(0, 0)];
        let mut filter = SteadyStateFilter::new(&scalar(a), &scalar(b), &scalar(c), &f.kalman_gain, &v1(0.0)).unwrap();
        let mut noise = GaussianStream::new(11);
        let mut x = 0.0;
        let burn_in = 1_000;
        let steps = 100_000;
        let mut errors = Vec::with_capacity(steps);
        let mut innovations = Vec::with_capacity(steps);
        for k in 0..burn_in + steps {
            let y = c * x + libm::sqrt(v) * noise.next_standard_normal();
            let pred = filter.prediction()[0];
            if k >= burn_in {
                errors.push(x - pred);
                innovations.push(y - c * pred);
            }
            let est = filter.update(&v1(y)).unwrap();
            let u = control(&est, &ctrl.gain).unwrap();
            filter.advance(&est, &u).unwrap();
            x = a * x + b * u[0] + libm::sqrt(w) * noise.next_standard_normal();
        }
        let var = |s: &[f64]| s.iter().map(|e| e * e).sum::<f64>() / s.len() as f64;
        assert!((var(&errors) - sigma).abs() / sigma < 0.03, "{} vs {sigma}", var(&errors));
        let innovation = c * sigma * c + v;
        assert!((var(&innovations) - innovation).abs() / innovation < 0.05);
    }

    #[test]
    fn moving_average_settles() {
        let (a, b) = (0.9, 1.0);
        let ctrl = solve_dare_control(&scalar(a), &scalar(b), &scalar(1.0), &scalar(1.0)).unwrap();
        let l = ctrl.gain[(0, 0)];
        let mut noise = GaussianStream::new(21);
        let mut x = 0.0;
        let mut costs = Vec::new();
        for _ in 0..2_500 {
            let u = l * x;
            costs.push(x * x + u * u);
            x = a * x + b * u + noise.next_standard_normal();
        }
        let m2000 = moving_average_cost(&costs, 2_000).unwrap();
        let m2500 = moving_average_cost(&costs, 2_500).unwrap();
        assert!((m2000 - m2500).abs() / m2500 < 0.05);
    }
}
