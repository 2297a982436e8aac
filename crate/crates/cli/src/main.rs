//! `anneal-cert`: certify, run and verify simulated annealing on bounded boxes.
//!
//! Exit codes: 0 on success, 1 on invalid input or runtime errors, 2 when the
//! requested certificate needs more final-stage steps than the budget allows.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Settings;

#[derive(Debug, Parser)]
#[command(
    name = "anneal-cert",
    version,
    about = "Certified simulated annealing on bounded boxes"
)]
struct Cli {
    /// JSON file with default settings; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute (J, delta, k) and the confidence for an (epsilon, alpha) target.
    Certify(Settings),
    /// Run the chain on a registry function, optionally under a certificate.
    Run(Settings),
    /// Run a verification suite.
    Verify(Settings),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share exit code 1 with other invalid input; 2 is
            // reserved for infeasible certificates
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (flags, run): (Settings, fn(&Settings) -> anyhow::Result<ExitCode>) = match cli.command {
        Command::Certify(s) => (s, commands::certify),
        Command::Run(s) => (s, commands::run),
        Command::Verify(s) => (s, commands::verify),
    };
    let settings = match &cli.config {
        Some(path) => Settings::load(path).map(|file| flags.over(file)),
        None => Ok(flags),
    };
    match settings.and_then(|s| run(&s)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
