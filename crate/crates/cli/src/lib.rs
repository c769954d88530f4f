//! The `heart` command line over `heart-core`.
//!
//! Exit status: 0 on success, 1 when a parameter or input fails validation,
//! 2 when a file cannot be read, parsed or written. Diagnostics go to
//! stderr as one line naming the subcommand and the parameter at fault;
//! machine output goes to files or stdout.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;

pub use args::Cli;
pub use config::CliConfig;
pub use error::{CliError, ErrorKind};

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapKind::DisplayHelp
                | ClapKind::DisplayVersion
                | ClapKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("heart {e}");
            e.exit_code()
        }
    }
}
