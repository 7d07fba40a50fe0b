//! `qca`: ensembles, histograms, phase diagrams, training and self-checks
//! for the dissipative-Ising quantum cellular automaton.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qca_core::QcaError;

use config::{ConfigError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "qca", version, about = "Quantum cellular automaton simulator")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a parity-balanced ensemble and write `sample_id,layer,mx`
    Evolve {
        #[arg(long)]
        out: PathBuf,
        /// Also write the initial-state manifest here
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Histogram one layer of a trajectory file
    Hist {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stationary |mx| over an (omega, v) grid
    PhaseDiagram {
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the jump parameters to teacher data
    Train {
        #[arg(long)]
        out: PathBuf,
    },
    /// Loss over an (a, b) grid
    Landscape {
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the engines on a small layer
    OracleCheck {
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_gate_fault: Option<f64>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<QcaError>() {
        Some(
            QcaError::InvalidParameter(_)
            | QcaError::TooLargeForDense { .. }
            | QcaError::DegenerateTrainingSet { .. }
            | QcaError::MalformedInput(_)
            | QcaError::Csv(_),
        ) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    cfg.validate()?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Evolve { out, manifest } => commands::evolve(&cfg, &out, manifest.as_deref())?,
        Command::Hist { input, out } => commands::hist(&cfg, &input, &out)?,
        Command::PhaseDiagram { out } => commands::phase(&cfg, &out)?,
        Command::Train { out } => commands::train_cmd(&cfg, &out)?,
        Command::Landscape { out } => commands::landscape(&cfg, &out)?,
        Command::OracleCheck { json, inject_gate_fault } => {
            return commands::oracle_check(&cfg, json.as_deref(), inject_gate_fault);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
