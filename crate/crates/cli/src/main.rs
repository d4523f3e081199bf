mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::commands::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors exit with 2, --help/--version with 0
        Err(e) => e.exit(),
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Core(e) if e.is_validation() => ExitCode::from(2),
                CliError::Core(_) => ExitCode::from(1),
            }
        }
    }
}
