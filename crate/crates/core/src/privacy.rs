//! Gaussian mechanism for trajectory-level (ε, δ)-differential privacy.
//!
//! An agent releasing `y_i(k) = C_i x_i(k)` adds i.i.d. `N(0, σ²)` noise to
//! every coordinate, with `σ = κ(δ, ε)·s_1(C_i)·b` where
//! `κ(δ, ε) = (K_δ + √(K_δ² + 2ε)) / (2ε)` and `K_δ = Q⁻¹(δ)`.
//! `σ` is a standard deviation throughout; covariance matrices carry `σ²`.
//!
//! `δ` is accepted on `(0, 1/2]`. The closed endpoint gives `K_δ = 0` and
//! `κ = 1/√(2ε)`, which the two-agent case study uses for its second agent.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix, Vector};
use crate::rng::GaussianStream;
use crate::{Error, Result};

/// Grid resolution of [`verify_dp_inequality`].
pub const DP_CHECK_POINTS: usize = 2001;
/// Half-width of the threshold grid, in units of σ.
pub const DP_CHECK_HALF_WIDTH: f64 = 10.0;

const Q_INVERSE_BRACKET: f64 = 40.0;

/// Per-agent privacy parameters and the adjacency radius `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySpec {
    epsilon: f64,
    delta: f64,
    adjacency_bound: f64,
}

impl PrivacySpec {
    pub fn new(epsilon: f64, delta: f64, adjacency_bound: f64) -> Result<Self> {
        validate_epsilon_delta(epsilon, delta)?;
        if !(adjacency_bound.is_finite() && adjacency_bound > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "adjacency bound must be positive, got {adjacency_bound}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            adjacency_bound,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn adjacency_bound(&self) -> f64 {
        self.adjacency_bound
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.delta, self.adjacency_bound)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(self.epsilon, delta, self.adjacency_bound)
    }
}

/// Per-coordinate standard deviation of the privacy noise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseScale(f64);

impl NoiseScale {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Self(sigma))
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "noise scale must be positive and finite, got {sigma}"
            )))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.0
    }

    pub fn variance(&self) -> f64 {
        self.0 * self.0
    }
}

fn validate_epsilon_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter(alloc::format!(
            "delta must lie in (0, 1/2], got {delta}"
        )));
    }
    Ok(())
}

/// Standard Gaussian upper tail `Q(y) = P[Z > y] = erfc(y/√2)/2`.
pub fn q_function(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!(
            "Q-function argument must be finite, got {y}"
        )));
    }
    Ok(tail(y))
}

fn tail(y: f64) -> f64 {
    0.5 * libm::erfc(y * core::f64::consts::FRAC_1_SQRT_2)
}

fn density(y: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * libm::exp(-0.5 * y * y)
}

/// `K_δ = Q⁻¹(δ)` by bracketed bisection on `[-40, 40]`, refined with one
/// Newton step.
pub fn q_inverse(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "Q-inverse argument must lie in (0, 1), got {delta}"
        )));
    }
    if delta == 0.5 {
        return Ok(0.0);
    }
    // Q is decreasing: Q(lo) > delta > Q(hi).
    let (mut lo, mut hi) = (-Q_INVERSE_BRACKET, Q_INVERSE_BRACKET);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if tail(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    let slope = density(y);
    if slope > 0.0 {
        let refined = y + (tail(y) - delta) / slope;
        if refined.is_finite() && (tail(refined) - delta).abs() <= (tail(y) - delta).abs() {
            return Ok(refined);
        }
    }
    Ok(y)
}

/// Calibration factor `κ(δ, ε) = (K_δ + √(K_δ² + 2ε)) / (2ε)`.
pub fn kappa(delta: f64, epsilon: f64) -> Result<f64> {
    validate_epsilon_delta(epsilon, delta)?;
    let k = q_inverse(delta)?;
    Ok((k + linalg::sqrt(k * k + 2.0 * epsilon)) / (2.0 * epsilon))
}

/// ℓ2 sensitivity bound `s_1(C_i)·b` of `y_i = C_i x_i` under `b`-adjacency.
pub fn sensitivity_bound(c: &Matrix, adjacency_bound: f64) -> Result<f64> {
    if !(adjacency_bound.is_finite() && adjacency_bound > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "adjacency bound must be positive, got {adjacency_bound}"
        )));
    }
    linalg::ensure_finite("output matrix", c)?;
    let s1 = linalg::largest_singular_value(c);
    if s1 == 0.0 {
        return Err(Error::InvalidParameter(
            "output matrix is zero; its sensitivity would call for no noise".into(),
        ));
    }
    Ok(s1 * adjacency_bound)
}

/// Minimal admissible noise scale: equality in the Gaussian-mechanism bound.
pub fn calibrate_sigma(spec: &PrivacySpec, c: &Matrix) -> Result<NoiseScale> {
    let k = kappa(spec.delta, spec.epsilon)?;
    let sensitivity = sensitivity_bound(c, spec.adjacency_bound)?;
    NoiseScale::new(k * sensitivity)
}

/// `ȳ = y + v` with `v ~ N(0, σ² I)` drawn coordinate by coordinate from `stream`.
pub fn privatize_output(y: &Vector, scale: NoiseScale, stream: &mut GaussianStream) -> Vector {
    let sigma = scale.sigma();
    y.map(|yi| yi + sigma * stream.next_standard_normal())
}

/// Outcome of [`verify_dp_inequality`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpCheck {
    pub holds: bool,
    /// `min_t [e^ε·P(Ỹ > t) + δ − P(Y > t)]` over the grid.
    pub min_slack: f64,
    /// Threshold attaining the minimum slack (the violating one when `!holds`).
    pub worst_threshold: f64,
}

/// Checks the (ε, δ) inequality for one-dimensional half-line events.
///
/// `Y ~ N(Δ₂, σ²)` and `Ỹ ~ N(0, σ²)` are the worst-case adjacent outputs.
/// Upper half-lines `{Y > t}` are the extremal events for a positive shift
/// (the likelihood ratio is monotone in `t`), so the inequality is evaluated
/// on `DP_CHECK_POINTS` thresholds spanning `Δ₂ ± 10σ`.
pub fn verify_dp_inequality(delta_2: f64, sigma: f64, epsilon: f64, delta: f64) -> Result<DpCheck> {
    validate_epsilon_delta(epsilon, delta)?;
    if !(delta_2.is_finite() && delta_2 >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "sensitivity must be non-negative, got {delta_2}"
        )));
    }
    NoiseScale::new(sigma)?;
    let shifted = delta_2;
    let e_eps = linalg::exp(epsilon);
    let lo = shifted - DP_CHECK_HALF_WIDTH * sigma;
    let step = 2.0 * DP_CHECK_HALF_WIDTH * sigma / (DP_CHECK_POINTS - 1) as f64;

    let mut best = DpCheck {
        holds: true,
        min_slack: f64::INFINITY,
        worst_threshold: lo,
    };
    for i in 0..DP_CHECK_POINTS {
        let t = lo + step * i as f64;
        let p = tail((t - shifted) / sigma);
        let p_adjacent = tail(t / sigma);
        let slack = e_eps * p_adjacent + delta - p;
        if slack < best.min_slack {
            best.min_slack = slack;
            best.worst_threshold = t;
        }
    }
    best.holds = best.min_slack >= 0.0;
    Ok(best)
}

/// `true` iff the stacked ℓ2 distance between the trajectories is at most `b`.
pub fn adjacency_check(v: &[Vector], w: &[Vector], b: f64) -> Result<bool> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "adjacency bound must be positive, got {b}"
        )));
    }
    if v.len() != w.len() {
        return Err(Error::len("trajectory length", v.len(), w.len()));
    }
    let mut squared = 0.0;
    for (a, c) in v.iter().zip(w) {
        if a.len() != c.len() {
            return Err(Error::len("trajectory sample", a.len(), c.len()));
        }
        squared += (a - c).norm_squared();
    }
    Ok(linalg::sqrt(squared) <= b)
}

/// Noise scales for a list of agents, in order.
pub fn calibrate_all<'a, I>(agents: I) -> Result<Vec<NoiseScale>>
where
    I: IntoIterator<Item = (&'a PrivacySpec, &'a Matrix)>,
{
    agents
        .into_iter()
        .map(|(spec, c)| calibrate_sigma(spec, c))
        .collect()
}
