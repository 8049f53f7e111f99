//! `onebit-mac`: solve, trace and certify boundary points of the capacity
//! region of a two-user Gaussian MAC observed through a one-bit quantizer.

mod args;
mod commands;
mod exit;
mod output;
mod selftest;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;

use args::{check_workers, Cli, Command};
use exit::{classify, Exit};

/// Environment variable holding the log filter.
const LOG_ENV: &str = "ONEBIT_MAC_LOG";

fn run(cli: Cli) -> Result<Exit> {
    check_workers(cli.workers)?;
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Trace(a) => commands::trace(a),
        Command::Verify(a) => commands::verify(a),
        Command::Remark2(a) => commands::remark2(a),
        Command::Selftest(a) => commands::selftest(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Exit::Usage as u8),
            };
        }
    };
    let status = match run(cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e:#}");
            classify(&e)
        }
    };
    ExitCode::from(status as u8)
}
