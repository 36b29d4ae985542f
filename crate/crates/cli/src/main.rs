//! `krylov-rmt` command-line front end.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};

/// Exit status 1 for bad input, 2 for failures during a run.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn runtime(message: String) -> Self {
        CliError { code: 2, message }
    }
}

impl From<krylov_rmt::Error> for CliError {
    fn from(e: krylov_rmt::Error) -> Self {
        let code = if e.is_validation() || matches!(e, krylov_rmt::Error::Parse(_)) { 1 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => commands::solve(a.with_config_file()?),
        Command::Sample(a) => commands::sample(a.with_config_file()?),
        Command::Verify(a) => commands::verify(a.with_config_file()?),
        Command::Table1(a) => commands::table1(a.with_config_file()?),
        Command::Halting(a) => commands::halting(a.with_config_file()?),
        Command::Predict(a) => commands::predict(a),
    }
}

fn usage_error(err: clap::Error) -> ExitCode {
    if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = err.print();
        return ExitCode::SUCCESS;
    }
    let _ = err.print();
    let mut cmd = Cli::command();
    let sub = std::env::args().nth(1).unwrap_or_default();
    let help = match cmd.find_subcommand_mut(&sub) {
        Some(s) => s.render_long_help(),
        None => cmd.render_long_help(),
    };
    eprintln!("\n{help}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return usage_error(e),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
