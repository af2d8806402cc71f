//! File formats, reports and the command-line front end for
//! `stochreach-core`.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod estimate;
pub mod format;
pub mod report;

use args::{Cli, Command};
use report::{emit_report, RunReport, Runtime, Tool, SCHEMA_VERSION};

/// Process exit codes.
pub mod exit {
    pub const PROVED: i32 = 0;
    pub const DISPROVED: i32 = 1;
    pub const UNKNOWN: i32 = 2;
    pub const USAGE: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] stochreach_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Write { .. } | CliError::Internal(_) => exit::INTERNAL,
            _ => exit::USAGE,
        }
    }
}

/// Parse `argv` (program name first), run, write the report and return the
/// exit code. Messages go to `stderr`; without `--output` the report goes
/// to `stdout`.
pub fn run(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    exit::PROVED
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    exit::USAGE
                }
            };
        }
    };
    match execute(&cli, argv) {
        Ok(report) => {
            let written = match &cli.output {
                Some(path) => emit_report(&report, path),
                None => report
                    .to_json()
                    .and_then(|s| stdout.write_all(s.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))),
            };
            match written {
                Ok(()) => report.exit_code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Run the parsed command on a pool of `cli.threads` workers.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<RunReport, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let start = Instant::now();
    let out = pool.install(|| match &cli.command {
        Command::Check(a) => commands::check(a),
        Command::Synthesize(a) => commands::synthesize(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Compare(a) => commands::compare(a),
    })?;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION.to_string(),
        tool: Tool::current(),
        command: args::echo(argv),
        inputs: out.inputs,
        result: out.result,
        exit_code: out.exit_code,
        runtime: Runtime {
            threads: pool.current_num_threads(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
