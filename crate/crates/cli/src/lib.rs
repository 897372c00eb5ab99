//! Command-line front end for the testroll sample-size engine.

pub mod args;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod output;

use std::process::ExitCode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<testroll::Error> for CliError {
    fn from(e: testroll::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// No admissible size satisfies the criterion.
    Infeasible,
    /// A validation suite failed.
    Failed,
}

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VALIDATION_FAILED: u8 = 3;

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Infeasible => EXIT_INFEASIBLE,
            Outcome::Failed => EXIT_VALIDATION_FAILED,
        }
    }
}

/// Parses `argv`, runs the command and maps the result to an exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match args::parse(argv) {
        Ok(Some(cfg)) => cfg,
        Ok(None) => return ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(w) = cfg.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
        {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match commands::run(&cfg) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
