use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dplqg::commands;
use dplqg::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dplqg", version, about = "Differentially private cloud LQG: synthesis, simulation, sweeps and entropy bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` from the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve both Riccati equations and write K, L, Σ, Σ̄, V and residuals.
    Synthesize(Common),
    /// Run the agent/cloud protocol and write trace, wire log and summary.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep a common ε over all agents.
    SweepEpsilon {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Override every agent's δ.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo runs per grid point.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
    },
    /// Evaluate the log-det entropy bound; exits non-zero if inapplicable.
    Bound(Common),
}

fn out_dir(common: &Common, config: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synthesize(common) => {
            let config = ExperimentConfig::load(&common.config)?;
            let path = commands::cmd_synthesize(&config, &out_dir(&common, &config))?;
            println!("wrote {}", path.display());
        }
        Command::Simulate { common, steps, seed } => {
            let config = ExperimentConfig::load(&common.config)?;
            let out = out_dir(&common, &config);
            let summary = commands::cmd_simulate(&config, steps.unwrap_or(config.horizon), seed.unwrap_or(config.seed), &out)?;
            print!("{}", dplqg::formats::key_value(&summary));
        }
        Command::SweepEpsilon { common, grid, delta, steps, seed, seeds } => {
            let config = ExperimentConfig::load(&common.config)?;
            let out = out_dir(&common, &config);
            let rows = commands::cmd_sweep_epsilon(
                &config,
                &grid,
                delta,
                steps.unwrap_or(config.horizon),
                seeds,
                seed.unwrap_or(config.seed),
                &out,
            )?;
            println!("wrote {} rows to {}", rows.len(), out.join(commands::SWEEP_FILE).display());
        }
        Command::Bound(common) => {
            let config = ExperimentConfig::load(&common.config)?;
            let report = commands::cmd_bound(&config, &out_dir(&common, &config))?;
            print!("{}", dplqg::formats::key_value(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
