use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("{0} must be positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("{0} must be positive semidefinite")]
    NotPositiveSemidefinite(&'static str),

    #[error("{0} must be diagonal")]
    NotDiagonal(&'static str),

    #[error("the pair (A, B) is not controllable (rank {rank} < {n})")]
    NotControllable { rank: usize, n: usize },

    #[error("the pair (A, {which}) is not observable (rank {rank} < {n})")]
    NotObservable {
        which: &'static str,
        rank: usize,
        n: usize,
    },

    #[error("Riccati iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("bound hypothesis violated (margin {margin:e})")]
    HypothesisViolated { margin: f64 },
}

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: alloc::format!("{}x{}", expected.0, expected.1),
            actual: alloc::format!("{}x{}", actual.0, actual.1),
        }
    }

    pub(crate) fn len(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected: alloc::format!("{expected}"),
            actual: alloc::format!("{actual}"),
        }
    }
}
