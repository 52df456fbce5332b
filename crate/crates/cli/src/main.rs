//! `mrokit`: solve MRO / SMRO / DRO games, reproduce fixtures, and run rate
//! experiments from JSON configs.
//!
//! Exit codes: 0 success, 1 i/o failure while writing results, 2 invalid
//! config or arguments, 3 dataset validation failure, 4 solver or replicate
//! failure, 5 reproduction mismatch.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "mrokit",
    version,
    about = "Minimax regret optimization over importance-weighted families"
)]
struct Cli {
    /// Worker threads for replicate parallelism (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one game on a JSON Lines dataset.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute a fixture's tables and check them against the reference values.
    Reproduce {
        #[arg(value_parser = ["prop1", "example2"])]
        fixture: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a replicated sweep over sample sizes and fit the log-log slope.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare unweighted and MRO reward regression on logged bandit data.
    Bandit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Solve {
            config,
            data,
            out,
            seed,
        } => commands::solve(&config, &data, out, seed),
        Command::Reproduce { fixture, out } => commands::reproduce(&fixture, out),
        Command::Rates { config, out, seed } => commands::rates(&config, out, seed),
        Command::Bandit { config, out, seed } => commands::bandit(&config, out, seed),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mrokit: {e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MROKIT_LOG", "error")).init();
    ExitCode::from(execute(std::env::args_os()))
}
