//! `digitrange`: simulation, construction and verification front end.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CliError, GlobalArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "digitrange", version, about = "Distinct-digit statistics for countable IFS digit expansions")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weights, cumulative sums, tail sums, s_K roots and Potter constants
    Weights(commands::WeightsArgs),
    /// Monte Carlo occupancy law
    Simulate(commands::SimulateArgs),
    /// Sample points of a construction and emit their traces
    #[command(subcommand)]
    Construct(commands::ConstructCommand),
    /// Cylinder sums S_n(s, θ), exact or Monte Carlo
    Cylsum(commands::CylsumArgs),
    /// Run an invariant suite
    Verify(commands::VerifyArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.global)?;
    // Ignore the error raised when a global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    match cli.command {
        Command::Weights(a) => commands::weights(&cfg, a),
        Command::Simulate(a) => commands::simulate(&cfg, a),
        Command::Construct(c) => commands::construct(&cfg, c),
        Command::Cylsum(a) => commands::cylsum(&cfg, a),
        Command::Verify(a) => commands::verify(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("digitrange: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
