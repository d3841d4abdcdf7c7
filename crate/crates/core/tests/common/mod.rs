#![allow(dead_code)]

use dplqg_core::linalg::{self, Matrix, Vector};
use dplqg_core::rng::GaussianStream;

pub fn gaussian_matrix(rows: usize, cols: usize, stream: &mut GaussianStream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| stream.next_standard_normal())
}

/// `G Gᵀ / n + floor·I`.
pub fn random_pd(n: usize, floor: f64, stream: &mut GaussianStream) -> Matrix {
    let g = gaussian_matrix(n, n, stream);
    linalg::symmetrize(&(&g * g.transpose() / n as f64 + Matrix::identity(n, n) * floor))
}

/// Random square matrix rescaled to spectral norm `norm`.
pub fn scaled_matrix(n: usize, norm: f64, stream: &mut GaussianStream) -> Matrix {
    let a = gaussian_matrix(n, n, stream);
    let s1 = linalg::largest_singular_value(&a);
    if s1 == 0.0 {
        a
    } else {
        a * (norm / s1)
    }
}

pub fn uniform(lo: f64, hi: f64, stream: &mut GaussianStream) -> f64 {
    lo + (hi - lo) * stream.next_uniform()
}

pub fn diag(d: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_vec(d.to_vec()))
}

/// `(A, B, C, Q, R, W, V)` with `(A, B)` controllable and `(A, C)` observable.
pub struct RandomSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub w: Matrix,
    pub v: Matrix,
}

pub fn random_system(n: usize, seed: u64) -> RandomSystem {
    let mut stream = GaussianStream::new(seed);
    loop {
        let m = 1 + (stream.next_uniform() * n as f64) as usize % n;
        let p = 1 + (stream.next_uniform() * n as f64) as usize % n;
        let a = scaled_matrix(n, uniform(0.2, 1.4, &mut stream), &mut stream);
        let b = gaussian_matrix(n, m, &mut stream);
        let c = gaussian_matrix(p, n, &mut stream);
        let ctrb = linalg::rank(&linalg::controllability_matrix(&a, &b)) == n;
        let obsv = linalg::rank(&linalg::observability_matrix(&a, &c)) == n;
        let well_conditioned = linalg::smallest_singular_value(&linalg::controllability_matrix(&a, &b)) > 1e-3
            && linalg::smallest_singular_value(&linalg::observability_matrix(&a, &c)) > 1e-3;
        if ctrb && obsv && well_conditioned {
            return RandomSystem {
                q: random_pd(n, 0.1, &mut stream),
                r: random_pd(m, 0.1, &mut stream),
                w: random_pd(n, 0.1, &mut stream),
                v: random_pd(p, 0.1, &mut stream),
                a,
                b,
                c,
            };
        }
    }
}

/// Instance for the entropy bounds: diagonal `C` and `V`.
pub struct BoundInstance {
    pub a: Matrix,
    pub w: Matrix,
    pub c: Matrix,
    pub v: Matrix,
}

pub fn random_bound_instance(stream: &mut GaussianStream) -> BoundInstance {
    let n = 1 + (stream.next_uniform() * 6.0) as usize % 6;
    let a = scaled_matrix(n, uniform(0.1, 1.3, stream), stream);
    let w = random_pd(n, 0.1, stream);
    let c: Vec<f64> = (0..n)
        .map(|_| {
            let sign = if stream.next_uniform() < 0.5 { -1.0 } else { 1.0 };
            sign * uniform(0.2, 2.0, stream)
        })
        .collect();
    let v: Vec<f64> = (0..n).map(|_| uniform(0.1, 10.0, stream).powi(2)).collect();
    BoundInstance { a, w, c: diag(&c), v: diag(&v) }
}
