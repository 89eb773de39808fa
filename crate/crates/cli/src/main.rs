//! `inhand` — train and summarize in-hand rotation experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inhand_cli::config::{resolve_args, RunArgs};
use inhand_cli::experiment::{run_experiment, RunOutcome};
use inhand_cli::summarize::summarize;

#[derive(Parser)]
#[command(
    name = "inhand",
    version,
    about = "Planar three-fingered hand learning to lift and spin a ball: \
             seeded PPO training runs, metrics, and summaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: train every trial and write rows + summary
    Run(RunArgs),
    /// Rebuild merged rows, summary, and plot points from a run directory
    Summarize {
        /// Run directory containing config.resolved.toml and trials/
        dir: PathBuf,
    },
    /// Print the fully resolved configuration as TOML and exit
    PrintConfig(RunArgs),
}

fn main() -> ExitCode {
    match try_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn report(outcome: &RunOutcome) {
    println!(
        "completed {}/{} trials",
        outcome.completed.len(),
        outcome.trials
    );
    if !outcome.failed.is_empty() {
        let failed: Vec<String> = outcome.failed.iter().map(u32::to_string).collect();
        println!("failed trials: {}", failed.join(", "));
    }
}

/// Returns whether the command fully succeeded; `run` demands that every
/// trial completed.
fn try_main() -> anyhow::Result<bool> {
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = resolve_args(&args)?;
            let outcome = run_experiment(&cfg)?;
            report(&outcome);
            Ok(outcome.all_completed())
        }
        Command::Summarize { dir } => {
            let outcome = summarize(&dir)?;
            report(&outcome);
            Ok(true)
        }
        Command::PrintConfig(args) => {
            print!("{}", resolve_args(&args)?.resolved_toml());
            Ok(true)
        }
    }
}
