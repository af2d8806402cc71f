//! Machine-readable run reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stochreach_core::certify::{Bound, CertReport, Params, PropositionId};
use stochreach_core::regioncheck::Status;
use stochreach_core::sim::Lattice;
use stochreach_core::synth::SynthStatus;
use stochreach_core::Semantics;

use crate::estimate::ProbabilityEstimate;
use crate::format::{to_json_string, CertificateFile};
use crate::CliError;

pub const SCHEMA_VERSION: &str = "stochreach-report/1";

/// Undecided boxes kept per obligation in a report.
pub const MAX_REPORTED_FRONTIER: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub tool: Tool,
    /// Arguments after the program name, without the flags that only affect
    /// where output goes or how many threads run.
    pub command: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub result: CommandResult,
    pub exit_code: i32,
    /// Everything that may differ between otherwise identical runs.
    pub runtime: Runtime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

impl Tool {
    pub fn current() -> Self {
        Tool {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub threads: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandResult {
    Check(CheckResult),
    Synthesize(Box<SynthesizeResult>),
    Simulate(SimulateResult),
    Oracle(OracleResult),
    Compare(CompareResult),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub prop: PropositionId,
    pub status: Status,
    pub bound: Option<Bound>,
    pub report: CertReport,
}

/// One point of the parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRun {
    pub params: Params,
    pub status: SynthStatus,
    pub bound: Option<Bound>,
    pub iterations: usize,
    pub samples_used: usize,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeResult {
    pub prop: PropositionId,
    pub status: SynthStatus,
    pub degree_v: u32,
    pub degree_w: u32,
    pub use_w: bool,
    pub runs: Vec<SynthRun>,
    /// Index into `runs` of the certificate returned.
    pub best: Option<usize>,
    pub certificate: Option<CertificateFile>,
    pub report: Option<CertReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartEstimate {
    pub x0: Vec<f64>,
    pub estimate: ProbabilityEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateResult {
    pub seed: u64,
    pub horizon: usize,
    pub trials: u64,
    pub semantics: Semantics,
    pub estimates: Vec<StartEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeValue {
    pub x: Vec<f64>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub lattice: Lattice,
    pub semantics: Semantics,
    /// `true` when the linear system was solved directly rather than iterated.
    pub direct: bool,
    /// States inside `X0`.
    pub starts: Vec<LatticeValue>,
    pub states: Vec<LatticeValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub prop: PropositionId,
    /// How the checked certificate was obtained from the input one.
    pub derived_via: String,
    pub status: Option<Status>,
    pub bound: Option<Bound>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub source_prop: PropositionId,
    pub rows: Vec<CompareRow>,
}

/// Drop all but the first few frontier boxes of every obligation.
pub fn trim_report(mut report: CertReport) -> CertReport {
    for ob in &mut report.obligations {
        ob.outcome.frontier.truncate(MAX_REPORTED_FRONTIER);
    }
    report
}

impl RunReport {
    pub fn to_json(&self) -> Result<String, CliError> {
        to_json_string(self)
    }

    /// The report as JSON with the `runtime` section removed.
    pub fn payload_json(&self) -> Result<String, CliError> {
        let mut value = serde_json::to_value(self).map_err(|e| CliError::Internal(e.to_string()))?;
        if let Some(map) = value.as_object_mut() {
            map.remove("runtime");
        }
        to_json_string(&value)
    }
}

pub fn emit_report(report: &RunReport, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, report.to_json()?).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
