//! `noccalc` — analytic bounds, mesh NoC simulations, buffer×rate sweeps,
//! and QoS scoring, driven by one TOML experiment file.

use clap::{Args, Parser, Subcommand};
use noccalc_cli::commands::{cmd_bound, cmd_qos, cmd_simulate, cmd_sweep, CliError};
use noccalc_cli::config;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "noccalc",
    version,
    about = "Worst-case delay bounds and cycle-level mesh NoC experiments, as reproducible CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep points; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic delay-bound table per (flow, application rate).
    Bound {
        #[command(flatten)]
        common: Common,
    },
    /// One simulation at the first configured sweep point.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Simulations over every buffer size × application rate.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Score a sweep CSV into weighted QoS curves.
    Qos {
        #[command(flatten)]
        common: Common,
        /// Sweep CSV produced by the sweep subcommand.
        #[arg(long)]
        sweep: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (common, csv) = match &cli.command {
        Command::Bound { common } => (common, cmd_bound(&load(common)?)),
        Command::Simulate { common } => (common, cmd_simulate(&load(common)?)?),
        Command::Sweep { common } => (common, cmd_sweep(&load(common)?, common.jobs)?),
        Command::Qos { common, sweep } => {
            let text = std::fs::read_to_string(sweep)
                .map_err(|source| CliError::Io { path: sweep.clone(), source })?;
            (common, cmd_qos(&load(common)?, &text)?)
        }
    };
    match &common.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|source| CliError::Io { path: path.clone(), source })
        }
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

fn load(common: &Common) -> Result<config::Experiment, CliError> {
    let mut exp = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        exp.seed = seed;
    }
    Ok(exp)
}
