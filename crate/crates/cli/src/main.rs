//! `ruinkit`: fit claim data, compute two-line ruin probabilities, simulate
//! and draw the results.

mod common;
mod fit;
mod report;
mod ruin;
mod simulate;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "ruinkit",
    version,
    about = "Ruin probabilities of the insurer-reinsurer quota-share model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a severity family to a `date,amount` CSV and test the fit.
    Fit(fit::FitArgs),
    /// Two-line ruin probabilities from a model config.
    Ruin(ruin::RuinArgs),
    /// Plain Monte Carlo of the two lines, optionally with NHPP arrivals or
    /// a bootstrap band.
    Simulate(simulate::SimulateArgs),
    /// SVG figures and CSV tables from earlier outputs.
    Report(report::ReportArgs),
}

/// Flags shared by every subcommand.
#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides RUINKIT_SEED and the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Ruin(a) => ruin::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Report(a) => report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}
