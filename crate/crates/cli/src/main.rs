mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// Failure categories, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or out-of-range values (exit 2).
    Usage(String),
    /// A computed result violated one of its invariants (exit 1).
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

pub fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::execute(&cli).and_then(|report| {
        let rendered = report::render(&report, cli.format).map_err(internal)?;
        match &cli.output {
            Some(path) => std::fs::write(path, rendered).map_err(internal),
            None => std::io::stdout().write_all(rendered.as_bytes()).map_err(internal),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Internal(msg) => eprintln!("internal error: {msg}"),
            }
            ExitCode::from(err.exit_code())
        }
    }
}
