//! `cdspin`: run, sweep, field-map and pulse-sequence experiments from a
//! flat config file.
//!
//! Exit status is 0 on success, 2 for config errors and 3 for numerical
//! failures. `CDSPIN_WORKERS` caps the worker threads.

mod config;
mod error;
mod experiment;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Axis, RunConfig};
use crate::error::CliError;

pub const WORKERS_ENV: &str = "CDSPIN_WORKERS";

#[derive(Parser)]
#[command(
    name = "cdspin",
    version,
    about = "Counterdiabatic spin-squeezing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate every configured mode and write trajectories and summaries.
    Run { config: PathBuf },
    /// Repeat the run over a list of values for one parameter.
    Sweep {
        config: PathBuf,
        /// One of n, omega_max, T, K, N.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
    },
    /// Bloch-sphere fields at one instant.
    Fields {
        config: PathBuf,
        #[arg(long)]
        time: f64,
    },
    /// Pulse programs for the compensating operators.
    Sequence { config: PathBuf },
}

fn init_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = raw.trim().parse().ok().filter(|&w| w > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{WORKERS_ENV}: expected a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Config(format!("{WORKERS_ENV}: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_workers()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            for r in experiment::run(&cfg)? {
                println!(
                    "{}: F = {:.10}, squeezing = {:.4} dB",
                    r.label,
                    r.final_fidelity(),
                    r.final_squeezing_db()
                );
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let cfg = RunConfig::load(&config)?;
            let axis: Axis = axis.parse()?;
            let values: Vec<String> = values.iter().map(|v| v.trim().to_string()).collect();
            for r in experiment::sweep(&cfg, axis, &values)? {
                println!(
                    "{} = {} {}: F = {:.10}, squeezing = {:.4} dB",
                    axis.name(),
                    r.value,
                    r.mode,
                    r.final_fidelity,
                    r.final_squeezing_db
                );
            }
        }
        Command::Fields { config, time } => {
            let cfg = RunConfig::load(&config)?;
            experiment::fields(&cfg, time)?;
        }
        Command::Sequence { config } => {
            let cfg = RunConfig::load(&config)?;
            experiment::write_sequence_report(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cdspin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
