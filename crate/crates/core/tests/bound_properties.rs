mod common;

use common::{random_bound_instance, random_pd};
use dplqg_core::entropy;
use dplqg_core::linalg::{self, Matrix};
use dplqg_core::riccati;
use dplqg_core::rng::GaussianStream;
use proptest::prelude::*;

fn det(m: &Matrix) -> f64 {
    m.clone().determinant()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_preserving_determinants(n in 1usize..=6, seed in any::<u64>()) {
        let mut stream = GaussianStream::new(seed);
        let q = random_pd(n, 0.05, &mut stream);
        let g = common::gaussian_matrix(n, n, &mut stream);
        let p = &q + &g * g.transpose();
        prop_assert!(det(&p) >= det(&q) * (1.0 - 1e-12));
        prop_assert!(entropy::logdet(&p).unwrap() >= entropy::logdet(&q).unwrap() - 1e-12);
    }

    #[test]
    fn determinant_below_trace_power(n in 1usize..=8, seed in any::<u64>()) {
        let mut stream = GaussianStream::new(seed);
        let g = common::gaussian_matrix(n, n, &mut stream);
        let m = &g * g.transpose();
        let am = linalg::trace(&m) / n as f64;
        prop_assert!(det(&m) <= am.powi(n as i32) * (1.0 + 1e-12));
    }

    #[test]
    fn bound_holds_whenever_hypothesis_does(seed in any::<u64>()) {
        let mut stream = GaussianStream::new(seed);
        let inst = random_bound_instance(&mut stream);
        let report = entropy::entropy_report(&inst.a, &inst.w, &inst.c, &inst.v).unwrap();
        prop_assert!(report.lambda_max_sigma >= report.eta * (1.0 - 1e-12));
        if report.hypothesis_holds {
            prop_assert!(report.logdet_sigma < report.theorem_bound.unwrap());
            let bound = entropy::sigma_upper_bound_matrix(&inst.a, &inst.w, &inst.c, &inst.v).unwrap();
            let sigma = riccati::solve_dare_filter(&inst.a, &inst.c, &inst.w, &inst.v).unwrap().sigma;
            prop_assert!(linalg::is_positive_semidefinite(&(bound - sigma), 1e-9));
        }
    }
}

#[test]
fn amgm_equality_for_scaled_identity() {
    for n in 1..=8 {
        let m = Matrix::identity(n, n) * 2.5;
        let am = linalg::trace(&m) / n as f64;
        assert!((det(&m) - am.powi(n as i32)).abs() <= 1e-12 * am.powi(n as i32));
    }
}

#[test]
fn logdet_matches_eigenvalue_product() {
    let mut stream = GaussianStream::new(5);
    for _ in 0..20 {
        let m = random_pd(5, 0.2, &mut stream);
        let oracle: f64 = m.clone().symmetric_eigenvalues().iter().map(|l| l.ln()).sum();
        assert!((entropy::logdet(&m).unwrap() - oracle).abs() < 1e-10);
    }
}
