//! `dagforge`: generate uniform random labelled DAGs, cache count tables,
//! and check samples statistically.
//!
//! Exit codes: 0 success, 1 table cache or I/O failure, 2 bad flags or
//! malformed input, 3 a statistical or structural check failed.

mod args;
mod error;
mod gen;
mod stats;
mod tables;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliResult;

const EXIT_CHECK_FAILED: u8 = 3;

fn run(cli: &Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Gen(a) => gen::run(a).map(|_| 0),
        Command::Tables(a) => tables::run(a).map(|_| 0),
        Command::Stats { test } => stats::run(test).map(|pass| if pass { 0 } else { EXIT_CHECK_FAILED }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dagforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
