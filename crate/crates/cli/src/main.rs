//! `hydride` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 invariant violation,
//! 3 solver failure. Every command writes `manifest.txt` to its output
//! directory, including on failure; the other artifacts are written only
//! after the command has succeeded.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "hydride", version, about = "Semi-implicit solver for a metal-hydride hydrogen storage model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured problem; writes snapshots, ledger and manifest.
    Run {
        config: PathBuf,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// τ-refinement study: Cauchy differences and uniform-in-τ ledgers.
    Refine {
        config: PathBuf,
        /// Comma-separated nested step counts.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        n: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allowed ratio of ledger suprema across the family.
        #[arg(long, default_value_t = hydride_core::diagnostics::DEFAULT_UNIFORMITY_FACTOR)]
        factor: f64,
    },
    /// Manufactured-solution convergence study.
    Mms {
        config: PathBuf,
        /// Manufactured case (`trig1d` or `trig2d`).
        #[arg(long = "case", default_value = "trig1d")]
        case_name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate the invariants of a stored state snapshot.
    Check {
        snapshot: PathBuf,
        /// Upper phase bound `λ_β`.
        #[arg(long, default_value_t = 1.0)]
        lambda_beta: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => commands::run(&config, out),
        Command::Refine { config, n, out, factor } => commands::refine(&config, &n, out, factor),
        Command::Mms { config, case_name, out } => commands::mms(&config, &case_name, out),
        Command::Check { snapshot, lambda_beta } => commands::check(&snapshot, lambda_beta),
    };
    ExitCode::from(code)
}
