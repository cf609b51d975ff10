//! The `mapflux` command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numerical failure,
//! 3 a verification suite ran and failed.

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;
use mapflux_core::io::write_json;
use mapflux_core::parallel::workers_from_env;
use mapflux_core::Error;

pub mod args;
pub mod manifest;
pub mod run;

pub use manifest::RunManifest;
pub use run::{execute, Outcome, RunSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_command(command: args::Command) -> mapflux_core::Result<i32> {
    let (spec, out) = args::resolve(command)?;
    let workers = workers_from_env();
    let outcome = execute(&spec, &out, workers)?;
    let manifest = RunManifest::new(spec, workers, outcome.outputs, outcome.wall_rejections);
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    println!("{}", outcome.message);
    Ok(if outcome.verification_failed {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    })
}
