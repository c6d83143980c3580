//! `radiogram` command-line tool and HTTP session service.

pub mod args;
pub mod commands;
pub mod service;

use std::ffi::OsString;

use clap::Parser;

pub use commands::CliError;

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ =
        env_logger::Builder::from_env(env_logger::Env::new().filter_or("RADIOGRAM_LOG", "warn"))
            .try_init();
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("radiogram: {e}");
            e.exit_code()
        }
    }
}
