//! `shrinklasso` command-line tool: coefficient tables, the Monte Carlo risk
//! study and the prostate analysis, each written to an output directory
//! together with a `manifest.json`.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{FitArgs, ProstateArgs, SimulateArgs};

#[derive(Debug, Parser)]
#[command(name = "shrinklasso", version, about = "LASSO with Stein-type double shrinkage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the LASSO and shrinkage variants at one penalty and write the coefficient table.
    Fit {
        #[command(flatten)]
        args: FitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimation risk of each estimator relative to the LASSO.
    Simulate {
        #[command(flatten)]
        args: SimulateArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Coefficient paths, one-SE selection of s and bootstrap prediction errors.
    Prostate {
        #[command(flatten)]
        args: ProstateArgs,
        #[command(flatten)]
        common: Common,
    },
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed for fold plans, bootstrap and simulation streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// `table` writes CSV files only; `table+svg` adds charts.
    #[arg(long, value_parser = ["table", "table+svg"])]
    pub format: Option<String>,
    /// Re-run with the configuration stored in a previous manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Fit { args, common } => commands::fit(args, &common),
        Command::Simulate { args, common } => commands::simulate(args, &common),
        Command::Prostate { args, common } => commands::prostate(args, &common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
