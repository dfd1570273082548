//! The `hsreg` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 parse error, 3 shape or data error
//! (including I/O failures), 4 non-convergence. Log verbosity is read from
//! `HSREG_LOG` (`error`, `warn`, `info`, `debug`, `trace`; default `warn`).

use std::ffi::OsString;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use args::{Cli, Command};
pub use error::{CliError, EXIT_CONVERGENCE, EXIT_DATA, EXIT_OK, EXIT_PARSE, EXIT_USAGE};

/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "HSREG_LOG";

const SUBCOMMANDS: [&str; 8] = [
    "convert",
    "calibrate",
    "preprocess",
    "split",
    "synth",
    "train",
    "evaluate",
    "benchmark",
];

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Some(path) = config::config_path(&args) {
        let path = std::path::PathBuf::from(path);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: config file {}: {e}", path.display());
                return EXIT_USAGE;
            }
        };
        match config::parse_config(&text, &path) {
            Ok(extra) => args = config::splice(args, extra, &SUBCOMMANDS),
            Err(e) => {
                eprintln!("error: {e}");
                return e.code;
            }
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
