//! Library side of the `citepot` binary: argument types, configuration
//! resolution, subcommands and exit codes.

pub mod args;
pub mod commands;
pub mod config;
pub mod exit;

use clap::Parser;

use args::Cli;
use config::{RunConfig, OUT_ENV};

/// Parses `argv`, runs the subcommand and returns the process exit code.
/// Errors are logged to standard error.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
        }
    };
    let result = RunConfig::resolve(&cli.shared, std::env::var_os(OUT_ENV).map(Into::into))
        .and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            exit::exit_code(&e)
        }
    }
}
