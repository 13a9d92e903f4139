//! Command-line driver for `pv-core`.
//!
//! [`run`] takes the full argument vector (program name first) and returns the
//! process exit code: 0 on success, 2 for validation errors, 3 when a budget or
//! guard refuses the instance, 1 for anything else. Every error is written to
//! standard error on one line prefixed `ERROR:`.

mod args;
mod commands;
mod config;
mod expr;
mod range;
pub mod records;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use args::Format;
pub use expr::parse_polynomial;
pub use range::{parse_geometric, parse_range};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Guard(_) => EXIT_GUARD,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl From<pv_core::Error> for CliError {
    fn from(e: pv_core::Error) -> Self {
        if e.is_guard() {
            CliError::Guard(e.to_string())
        } else if matches!(e, pv_core::Error::Mismatch(_)) {
            CliError::Failure(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

/// Runs against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs with explicit output streams; `--out` still writes to its file.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match execute(argv, out) {
        Ok(()) => EXIT_OK,
        Err(Outcome::Help(text)) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(Outcome::Error(e)) => {
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("unknown error");
            let line = line.trim().trim_start_matches("error: ");
            let _ = writeln!(err, "ERROR: {line}");
            e.exit_code()
        }
    }
}

enum Outcome {
    Help(String),
    Error(CliError),
}

impl From<CliError> for Outcome {
    fn from(e: CliError) -> Self {
        Outcome::Error(e)
    }
}

fn execute(argv: Vec<OsString>, out: &mut dyn Write) -> Result<(), Outcome> {
    let argv = config::expand(argv)?;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Err(Outcome::Help(e.render().to_string())),
                _ => Err(Outcome::Error(CliError::Usage(e.render().to_string()))),
            };
        }
    };
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failure(format!("cannot start thread pool: {e}")))?;
    let text = pool.install(|| commands::dispatch(&cli))?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failure(format!("cannot write output: {e}")))?,
    }
    Ok(())
}
