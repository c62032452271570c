//! `krig`: Gibbs compromises, posterior sampling of correlation lengths, prediction,
//! and replication studies.

mod commands;
mod config;
mod error;
mod io;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "krig", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gibbs compromise and energy minimizers of a finite kernel system.
    Compromise(commands::compromise::Args),
    /// Sample the posterior of correlation lengths and compute point estimates.
    Fit(commands::fit::Args),
    /// Prediction intervals at new points from a fit directory.
    Predict(commands::predict::Args),
    /// Replication study: rmse, coverage or ackley.
    Experiment(commands::experiment::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Compromise(a) => commands::compromise::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::Predict(a) => commands::predict::run(a),
        Command::Experiment(a) => commands::experiment::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
