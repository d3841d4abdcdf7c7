use std::path::PathBuf;

use dplqg_core::Error as CoreError;

pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_ASSUMPTION: i32 = 4;
pub const EXIT_NON_CONVERGENCE: i32 = 5;
pub const EXIT_BOUND_INAPPLICABLE: i32 = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("agent {agent}: {source}")]
    Agent {
        agent: usize,
        #[source]
        source: Box<CliError>,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("bound inapplicable: hypothesis margin {margin:e} is not positive")]
    BoundInapplicable { margin: f64 },
}

impl CliError {
    pub fn for_agent(self, agent: usize) -> Self {
        CliError::Agent {
            agent,
            source: Box::new(self),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Agent { source, .. } => source.exit_code(),
            CliError::BoundInapplicable { .. } => EXIT_BOUND_INAPPLICABLE,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_) | CoreError::DimensionMismatch { .. } => EXIT_VALIDATION,
                CoreError::NotPositiveDefinite(_)
                | CoreError::NotPositiveSemidefinite(_)
                | CoreError::NotControllable { .. }
                | CoreError::NotObservable { .. } => EXIT_ASSUMPTION,
                CoreError::NonConvergence { .. } | CoreError::Singular(_) => EXIT_NON_CONVERGENCE,
                CoreError::HypothesisViolated { .. } | CoreError::NotDiagonal(_) => EXIT_BOUND_INAPPLICABLE,
            },
        }
    }
}
