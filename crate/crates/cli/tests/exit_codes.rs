mod common;

use common::run;
use stochreach::exit;
use stochreach::report::CommandResult;
use stochreach_core::regioncheck::Status;

const C: &str = "fixtures/model-c.prob";
const A: &str = "fixtures/model-a.prob";
const CERT: &str = "fixtures/c1.cert";

/// Runs that produce a report: the process code must equal the report's.
fn reported(args: &[&str], expected: i32) -> CommandResult {
    let out = run(args);
    assert_eq!(out.code, expected, "{args:?}\n{}", out.stderr);
    let report = out.report();
    assert_eq!(report.exit_code, out.code);
    report.result
}

fn check_status(result: &CommandResult) -> Status {
    match result {
        CommandResult::Check(c) => c.status,
        other => panic!("not a check result: {other:?}"),
    }
}

#[test]
fn check_maps_status_to_code() {
    let proved = reported(&["check", "--problem", C, "--certificate", CERT], exit::PROVED);
    assert_eq!(check_status(&proved), Status::Proved);
    let disproved = reported(&["check", "--problem", A, "--certificate", CERT, "--prop", "P7"], exit::DISPROVED);
    assert_eq!(check_status(&disproved), Status::Disproved);
    // Without bisection the square's enclosure straddles zero.
    let unknown = reported(&["check", "--problem", C, "--certificate", CERT, "--depth", "0"], exit::UNKNOWN);
    assert_eq!(check_status(&unknown), Status::Unknown);
}

#[test]
fn synthesize_codes() {
    reported(&["synthesize", "--problem", C, "--prop", "P1", "--degree-v", "2"], exit::PROVED);
    reported(&["synthesize", "--problem", "fixtures/model-b.prob", "--eps", "1.0", "--max-iterations", "5"], exit::UNKNOWN);
}

#[test]
fn compare_codes() {
    reported(&["compare", "--problem", C, "--certificate", CERT, "--props", "P1,P7"], exit::PROVED);
    reported(&["compare", "--problem", A, "--certificate", CERT, "--props", "P7"], exit::DISPROVED);
    reported(&["compare", "--problem", C, "--certificate", CERT, "--props"], exit::PROVED);
    // P4 needs k and c, which the certificate does not carry.
    reported(&["compare", "--problem", C, "--certificate", CERT, "--props", "P4"], exit::UNKNOWN);
}

#[test]
fn simulate_and_oracle_succeed() {
    reported(&["simulate", "--problem", C, "--trials", "10"], 0);
    reported(&["oracle", "--problem", "fixtures/model-b.prob"], 0);
}

#[test]
fn usage_errors() {
    for args in [
        vec!["check", "--problem", "fixtures/missing.prob", "--certificate", CERT],
        vec!["check", "--problem", C],
        vec!["frobnicate"],
        vec!["check", "--problem", C, "--certificate", CERT, "--prop", "P99"],
        vec!["check", "--problem", "fixtures/model-b.prob", "--certificate", CERT],
        vec!["synthesize", "--problem", C],
        vec!["oracle", "--problem", A],
    ] {
        let out = run(&args);
        assert_eq!(out.code, exit::USAGE, "{args:?}: {}", out.stderr);
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["--version"]).code, 0);
    assert!(run(&["check", "--help"]).stdout.contains("--certificate"));
}

#[test]
fn unwritable_output_is_internal() {
    let out = run(&["oracle", "--problem", "fixtures/model-b.prob", "-o", "/nonexistent/dir/report.json"]);
    assert_eq!(out.code, exit::INTERNAL);
}
