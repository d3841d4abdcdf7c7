//! File formats: trace and wire-log CSVs, flat key-value reports.
//!
//! Trace CSV, one row per `(k, agent)`:
//! `k,agent_id,x0..x{N-1},xhat0..xhat{N-1},u0..u{M-1},ybar0..ybar{N-1},stage_cost,avg_cost`
//! where `N`/`M` are the largest agent state/input dimensions; agents with
//! fewer coordinates leave the trailing cells empty. `stage_cost` and
//! `avg_cost` are network-level and repeat on every agent row of a step.
//!
//! Wire CSV, one row per message in send order:
//! `kind,sender,receiver,k,payload0..payload{P-1}` with `kind` one of
//! `MEASUREMENT`/`CONTROL` and endpoints written `cloud` or `agent<i>`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a file back yields the exact bits.
//!
//! Reports are flat `key = value` documents (valid TOML); matrices are
//! row lists.

use std::io::Write;
use std::path::Path;

use dplqg_core::sim::{Endpoint, MessageKind, SimulationTrace, WireMessage};
use dplqg_core::Vector;
use serde::Serialize;

use crate::error::CliError;

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

fn push_padded(row: &mut Vec<String>, values: impl Iterator<Item = f64>, width: usize) {
    let start = row.len();
    row.extend(values.map(|v| v.to_string()));
    row.resize(start + width, String::new());
}

pub fn trace_csv(trace: &SimulationTrace) -> Result<Vec<u8>, CliError> {
    let n = trace.blocks.iter().map(|b| b.state_dim).max().unwrap_or(0);
    let m = trace.blocks.iter().map(|b| b.input_dim).max().unwrap_or(0);
    let mut header = vec!["k".to_string(), "agent_id".to_string()];
    for (prefix, width) in [("x", n), ("xhat", n), ("u", m), ("ybar", n)] {
        header.extend((0..width).map(|i| format!("{prefix}{i}")));
    }
    header.push("stage_cost".into());
    header.push("avg_cost".into());

    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(&header).map_err(csv_error)?;
    for step in &trace.steps {
        for (id, block) in trace.blocks.iter().enumerate() {
            let mut row = vec![step.k.to_string(), id.to_string()];
            push_padded(&mut row, block.state(&step.x).iter().copied(), n);
            push_padded(&mut row, block.state(&step.x_hat).iter().copied(), n);
            push_padded(&mut row, block.input(&step.u).iter().copied(), m);
            push_padded(&mut row, block.state(&step.y_bar).iter().copied(), n);
            row.push(step.stage_cost.to_string());
            row.push(step.average_cost.to_string());
            out.write_record(&row).map_err(csv_error)?;
        }
    }
    out.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
}

fn endpoint_name(e: Endpoint) -> String {
    match e {
        Endpoint::Cloud => "cloud".into(),
        Endpoint::Agent(i) => format!("agent{i}"),
    }
}

fn parse_endpoint(s: &str) -> Result<Endpoint, CliError> {
    if s == "cloud" {
        return Ok(Endpoint::Cloud);
    }
    s.strip_prefix("agent")
        .and_then(|i| i.parse().ok())
        .map(Endpoint::Agent)
        .ok_or_else(|| CliError::Config(format!("wire log: bad endpoint {s:?}")))
}

pub fn wire_csv(wire: &[WireMessage]) -> Result<Vec<u8>, CliError> {
    let width = wire.iter().map(|m| m.payload.len()).max().unwrap_or(0);
    let mut header: Vec<String> = ["kind", "sender", "receiver", "k"].iter().map(|s| s.to_string()).collect();
    header.extend((0..width).map(|i| format!("payload{i}")));

    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(&header).map_err(csv_error)?;
    for msg in wire {
        let kind = match msg.kind {
            MessageKind::Measurement => "MEASUREMENT",
            MessageKind::Control => "CONTROL",
        };
        let mut row = vec![kind.to_string(), endpoint_name(msg.sender), endpoint_name(msg.receiver), msg.k.to_string()];
        push_padded(&mut row, msg.payload.iter().copied(), width);
        out.write_record(&row).map_err(csv_error)?;
    }
    out.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
}

pub fn parse_wire_csv(bytes: &[u8]) -> Result<Vec<WireMessage>, CliError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let kind = match field(0) {
            "MEASUREMENT" => MessageKind::Measurement,
            "CONTROL" => MessageKind::Control,
            other => return Err(CliError::Config(format!("wire log: bad kind {other:?}"))),
        };
        let k = field(3)
            .parse()
            .map_err(|_| CliError::Config(format!("wire log: bad step {:?}", field(3))))?;
        let payload = record
            .iter()
            .skip(4)
            .take_while(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| CliError::Config(format!("wire log: bad value {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(WireMessage {
            kind,
            sender: parse_endpoint(field(1))?,
            receiver: parse_endpoint(field(2))?,
            k,
            payload: Vector::from_vec(payload),
        });
    }
    Ok(out)
}

/// One row of the ε-sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Noise scale of agent 0.
    pub sigma: f64,
    pub mean_cost: f64,
    pub logdet_sigma: f64,
    /// NaN when the bound hypothesis fails or `C` is not diagonal.
    pub theorem_bound: f64,
    pub hypothesis_margin: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["epsilon", "sigma", "mean_cost", "logdet_sigma", "theorem_bound", "hypothesis_margin"])
        .map_err(csv_error)?;
    for r in rows {
        out.write_record(
            [r.epsilon, r.sigma, r.mean_cost, r.logdet_sigma, r.theorem_bound, r.hypothesis_margin].map(|v| v.to_string()),
        )
        .map_err(csv_error)?;
    }
    out.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
}

/// Flat key-value rendering of a report struct.
pub fn key_value<T: Serialize>(report: &T) -> String {
    toml::to_string(report).expect("reports serialize to flat TOML")
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut file = std::fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}
