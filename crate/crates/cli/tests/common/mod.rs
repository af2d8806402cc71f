#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use stochreach::report::RunReport;

pub fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    crate_dir().join("fixtures").join(name)
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn report(&self) -> RunReport {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}\n{}\n{}", self.stdout, self.stderr))
    }
}

/// Run the binary from the crate directory, so relative fixture paths
/// appear in reports exactly as written here.
pub fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_stochreach"))
        .args(args)
        .current_dir(crate_dir())
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// Every fixture command with a committed golden report: name and arguments.
pub const FIXTURE_COMMANDS: &[(&str, &[&str])] = &[
    ("check-c-p1", &["check", "--problem", "fixtures/model-c.prob", "--certificate", "fixtures/c1.cert"]),
    (
        "check-a-p7",
        &["check", "--problem", "fixtures/model-a.prob", "--certificate", "fixtures/c1.cert", "--prop", "P7"],
    ),
    ("synthesize-a", &["synthesize", "--problem", "fixtures/model-a.prob"]),
    ("synthesize-b", &["synthesize", "--problem", "fixtures/model-b.prob"]),
    ("synthesize-c-p1", &["synthesize", "--problem", "fixtures/model-c.prob", "--prop", "P1"]),
    ("synthesize-d", &["synthesize", "--problem", "fixtures/model-d.prob"]),
    ("synthesize-e-p3", &["synthesize", "--problem", "fixtures/model-e.prob", "--prop", "P3", "--degree-v", "6"]),
    ("synthesize-a-p14", &["synthesize", "--problem", "fixtures/model-a.prob", "--prop", "P14"]),
    ("simulate-a", &["simulate", "--problem", "fixtures/model-a.prob", "--trials", "2000"]),
    ("simulate-b", &["simulate", "--problem", "fixtures/model-b.prob"]),
    ("simulate-e", &["simulate", "--problem", "fixtures/model-e.prob", "--seed", "7"]),
    ("oracle-b", &["oracle", "--problem", "fixtures/model-b.prob"]),
    (
        "compare-c",
        &[
            "compare",
            "--problem",
            "fixtures/model-c.prob",
            "--certificate",
            "fixtures/c1.cert",
            "--props",
            "P1,P7,P8,P4",
            "--k",
            "1",
            "--c",
            "0",
            "--eps-prime",
            "0.0124",
        ],
    ),
];

/// Report payload (everything but the runtime section) of one run.
pub fn payload(args: &[&str]) -> (i32, String) {
    let out = run(args);
    assert!(out.code <= 2, "{args:?}: {}", out.stderr);
    (out.code, out.report().payload_json().unwrap())
}
