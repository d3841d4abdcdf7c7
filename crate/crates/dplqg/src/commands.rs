//! The four commands, as library functions. Each one is a pure function of
//! its config and flags; the `cmd_*` wrappers only add file output.

use std::path::{Path, PathBuf};

use dplqg_core::entropy;
use dplqg_core::linalg;
use dplqg_core::network::{self, AgentModel, NetworkModel, Synthesis};
use dplqg_core::sim::{self, SimulationTrace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{matrix_to_rows, ExperimentConfig};
use crate::error::CliError;
use crate::formats::{self, SweepRow};

pub const SYNTHESIS_FILE: &str = "synthesis.toml";
pub const TRACE_FILE: &str = "trace.csv";
pub const WIRE_FILE: &str = "wire.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const BOUND_FILE: &str = "bound.txt";

/// Validated agents, assembled network and precomputed synthesis.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub agents: Vec<AgentModel>,
    pub model: NetworkModel,
    pub synthesis: Synthesis,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, CliError> {
    let agents = config.agent_models()?;
    let (q, r) = config.cost_matrices()?;
    let model = network::assemble_network(&agents, &q, &r)?;
    let synthesis = model.synthesize()?;
    Ok(Prepared { agents, model, synthesis })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub agents: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub noise_sigma: Vec<f64>,
    pub control_iterations: usize,
    pub control_residual: f64,
    pub filter_iterations: usize,
    pub filter_residual: f64,
    pub closed_loop_spectral_radius: f64,
    pub logdet_sigma: f64,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    #[serde(rename = "Sigma")]
    pub sigma: Vec<Vec<f64>>,
    #[serde(rename = "Sigma_bar")]
    pub sigma_bar: Vec<Vec<f64>>,
    pub kalman_gain: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
}

pub fn synthesize(config: &ExperimentConfig) -> Result<SynthesisReport, CliError> {
    let p = prepare(config)?;
    let (ctrl, filt) = (&p.synthesis.control, &p.synthesis.filter);
    Ok(SynthesisReport {
        agents: p.model.agent_count(),
        state_dim: p.model.state_dim(),
        input_dim: p.model.input_dim(),
        noise_sigma: p.model.noise.iter().map(|s| s.sigma()).collect(),
        control_iterations: ctrl.iterations,
        control_residual: ctrl.residual,
        filter_iterations: filt.iterations,
        filter_residual: filt.residual,
        closed_loop_spectral_radius: linalg::spectral_radius(&ctrl.closed_loop(&p.model.a, &p.model.b)),
        logdet_sigma: entropy::logdet(&filt.sigma)?,
        k: matrix_to_rows(&ctrl.k),
        l: matrix_to_rows(&ctrl.gain),
        sigma: matrix_to_rows(&filt.sigma),
        sigma_bar: matrix_to_rows(&filt.sigma_bar),
        kalman_gain: matrix_to_rows(&filt.kalman_gain),
        v: matrix_to_rows(&p.model.v),
    })
}

pub fn cmd_synthesize(config: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let report = synthesize(config)?;
    let path = out.join(SYNTHESIS_FILE);
    formats::write_atomic(&path, formats::key_value(&report).as_bytes())?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub steps: usize,
    pub seed: u64,
    pub agents: usize,
    pub messages: usize,
    pub final_average_cost: Option<f64>,
    pub max_state_norm: f64,
    pub logdet_sigma: f64,
    pub noise_sigma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub prepared: Prepared,
    pub trace: SimulationTrace,
    pub summary: SimulationSummary,
}

pub fn simulate(config: &ExperimentConfig, steps: usize, seed: u64) -> Result<SimulationOutput, CliError> {
    let prepared = prepare(config)?;
    let trace = sim::run_simulation(&prepared.model, &prepared.synthesis, &prepared.agents, steps, seed)?;
    let summary = SimulationSummary {
        steps,
        seed,
        agents: prepared.agents.len(),
        messages: trace.wire.len(),
        final_average_cost: trace.final_average_cost(),
        max_state_norm: trace.max_state_norm(),
        logdet_sigma: entropy::logdet(&prepared.synthesis.filter.sigma)?,
        noise_sigma: prepared.model.noise.iter().map(|s| s.sigma()).collect(),
    };
    Ok(SimulationOutput { prepared, trace, summary })
}

pub fn cmd_simulate(config: &ExperimentConfig, steps: usize, seed: u64, out: &Path) -> Result<SimulationSummary, CliError> {
    let run = simulate(config, steps, seed)?;
    formats::write_atomic(&out.join(TRACE_FILE), &formats::trace_csv(&run.trace)?)?;
    formats::write_atomic(&out.join(WIRE_FILE), &formats::wire_csv(&run.trace.wire)?)?;
    formats::write_atomic(&out.join(SUMMARY_FILE), formats::key_value(&run.summary).as_bytes())?;
    Ok(run.summary)
}

/// Seed of the `index`-th Monte Carlo run of a sweep point.
pub fn sweep_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// For each ε: sets every agent to `(ε, δ)`, synthesizes, and averages the
/// mean stage cost over `seeds` runs of `steps` steps. Run `s` uses seed
/// `base_seed + s` at every grid point.
pub fn sweep_epsilon(
    config: &ExperimentConfig,
    grid: &[f64],
    delta: Option<f64>,
    steps: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<Vec<SweepRow>, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("epsilon grid is empty".into()));
    }
    if seeds == 0 || steps == 0 {
        return Err(CliError::Config("sweep needs at least one seed and one step".into()));
    }
    grid.par_iter()
        .map(|&epsilon| {
            let cfg = config.with_privacy(epsilon, delta);
            let p = prepare(&cfg)?;
            let costs = (0..seeds)
                .into_par_iter()
                .map(|s| {
                    let trace = sim::run_simulation(&p.model, &p.synthesis, &p.agents, steps, sweep_seed(base_seed, s))?;
                    Ok(trace.final_average_cost().unwrap_or(f64::NAN))
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            let (theorem_bound, hypothesis_margin) =
                match entropy::entropy_report(&p.model.a, &p.model.w, &p.model.c, &p.model.v) {
                    Ok(r) => (r.theorem_bound.unwrap_or(f64::NAN), r.hypothesis_margin),
                    Err(dplqg_core::Error::NotDiagonal(_)) => (f64::NAN, f64::NAN),
                    Err(e) => return Err(e.into()),
                };
            Ok(SweepRow {
                epsilon,
                sigma: p.model.noise[0].sigma(),
                mean_cost: costs.iter().sum::<f64>() / seeds as f64,
                logdet_sigma: entropy::logdet(&p.synthesis.filter.sigma)?,
                theorem_bound,
                hypothesis_margin,
            })
        })
        .collect()
}

pub fn cmd_sweep_epsilon(
    config: &ExperimentConfig,
    grid: &[f64],
    delta: Option<f64>,
    steps: usize,
    seeds: usize,
    base_seed: u64,
    out: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    let rows = sweep_epsilon(config, grid, delta, steps, seeds, base_seed)?;
    formats::write_atomic(&out.join(SWEEP_FILE), &formats::sweep_csv(&rows)?)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReportFile {
    pub status: String,
    pub hypothesis_holds: bool,
    pub hypothesis_margin: f64,
    pub eta: f64,
    pub gamma_diag: Vec<f64>,
    pub logdet_sigma: f64,
    pub lambda_max_sigma: f64,
    pub privacy_term: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amgm_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remark_estimate: Option<f64>,
}

pub fn bound(config: &ExperimentConfig) -> Result<BoundReportFile, CliError> {
    let p = prepare(config)?;
    let m = &p.model;
    let r = entropy::entropy_report(&m.a, &m.w, &m.c, &m.v)?;
    Ok(BoundReportFile {
        status: if r.hypothesis_holds { "applicable" } else { "inapplicable" }.into(),
        hypothesis_holds: r.hypothesis_holds,
        hypothesis_margin: r.hypothesis_margin,
        eta: r.eta,
        gamma_diag: r.gamma_diag,
        logdet_sigma: r.logdet_sigma,
        lambda_max_sigma: r.lambda_max_sigma,
        privacy_term: r.privacy_term,
        bound_coefficient: r.bound_coefficient,
        amgm_bound: r.amgm_bound,
        theorem_bound: r.theorem_bound,
        remark_estimate: r.remark_estimate,
    })
}

/// Writes the report either way; fails with [`CliError::BoundInapplicable`]
/// when the hypothesis does not hold.
pub fn cmd_bound(config: &ExperimentConfig, out: &Path) -> Result<BoundReportFile, CliError> {
    let report = bound(config)?;
    formats::write_atomic(&out.join(BOUND_FILE), formats::key_value(&report).as_bytes())?;
    if !report.hypothesis_holds {
        return Err(CliError::BoundInapplicable {
            margin: report.hypothesis_margin,
        });
    }
    Ok(report)
}
