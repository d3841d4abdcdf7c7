//! Experiment configuration (TOML).
//!
//! ```toml
//! horizon = 200
//! seed = 1
//!
//! [cost]
//! q = { random_pd = 11 }          # or an explicit row list [[...], ...]
//! r = [[1.0, 0.2], [0.2, 2.0]]
//!
//! [[agents]]
//! a = [[1.0, 0.1], [0.0, 1.0]]
//! b = [[0.0], [1.0]]
//! c = [[1.0, 0.0], [0.0, 1.0]]
//! w = [[1.0, 0.5], [0.5, 1.0]]
//! epsilon = 0.1
//! delta = 0.01
//! adjacency_bound = 1.0
//! x0_mean = [0.0, 0.0]
//! ```
//!
//! Matrices are row-major lists of rows. `random_pd = s` expands to
//! `GᵀG + 0.1·I` with `G` drawn from seed `s`, sized to the network.

use std::path::{Path, PathBuf};

use dplqg_core::network::{self, AgentModel};
use dplqg_core::privacy::PrivacySpec;
use dplqg_core::{Matrix, Vector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    pub cost: CostConfig,
    pub agents: Vec<AgentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

fn default_horizon() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub q: MatrixSpec,
    pub r: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Explicit(Vec<Vec<f64>>),
    Random { random_pd: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "default_adjacency")]
    pub adjacency_bound: f64,
    pub x0_mean: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_true: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_covariance: Option<Vec<Vec<f64>>>,
}

fn default_adjacency() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Fails only for values TOML cannot hold, such as seeds above `i64::MAX`.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn agent_models(&self) -> Result<Vec<AgentModel>, CliError> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, agent)| agent.to_model().map_err(|e| e.for_agent(i)))
            .collect()
    }

    /// `(Q, R)` sized for the configured agents.
    pub fn cost_matrices(&self) -> Result<(Matrix, Matrix), CliError> {
        let n = self.agents.iter().map(|a| a.a.len()).sum();
        let m = self.agents.iter().map(|a| a.b.first().map_or(0, Vec::len)).sum();
        Ok((self.cost.q.build("cost.q", n)?, self.cost.r.build("cost.r", m)?))
    }

    /// Same config with every agent's ε (and optionally δ) replaced.
    pub fn with_privacy(&self, epsilon: f64, delta: Option<f64>) -> Self {
        let mut out = self.clone();
        for agent in &mut out.agents {
            agent.epsilon = epsilon;
            if let Some(delta) = delta {
                agent.delta = delta;
            }
        }
        out
    }
}

impl MatrixSpec {
    fn build(&self, name: &str, dim: usize) -> Result<Matrix, CliError> {
        match self {
            MatrixSpec::Explicit(rows) => matrix_from_rows(name, rows),
            MatrixSpec::Random { random_pd } => Ok(network::random_positive_definite(dim, *random_pd)),
        }
    }
}

impl AgentConfig {
    pub fn to_model(&self) -> Result<AgentModel, CliError> {
        let privacy = PrivacySpec::new(self.epsilon, self.delta, self.adjacency_bound)?;
        let mut model = AgentModel::new(
            matrix_from_rows("a", &self.a)?,
            matrix_from_rows("b", &self.b)?,
            matrix_from_rows("c", &self.c)?,
            matrix_from_rows("w", &self.w)?,
            privacy,
            Vector::from_vec(self.x0_mean.clone()),
        )?;
        if let Some(x0) = &self.x0_true {
            model = model.with_true_initial_state(Vector::from_vec(x0.clone()))?;
        }
        if let Some(cov) = &self.x0_covariance {
            model = model.with_initial_covariance(matrix_from_rows("x0_covariance", cov)?)?;
        }
        Ok(model)
    }
}

pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Config(format!("{name}: rows have different lengths")));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
