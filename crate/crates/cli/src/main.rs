//! `platoon`: command line frontend for platoon spectra, continuum models,
//! size sweeps, simulations and H-infinity norms.
//!
//! Exit status is 0 on success, 2 for invalid input and 3 for numerical
//! failures. `PLATOON_THREADS` caps the number of worker threads.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, EXIT_USAGE};

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("PLATOON_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::usage(format!("PLATOON_THREADS must be a positive integer, got \"{value}\"")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Eigs(a) => commands::eigs(a),
        Command::Pde(a) => commands::pde(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Mistune(a) => commands::mistune(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Hinf(a) => commands::hinf(a),
        Command::Asymptote(a) => commands::asymptote(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
