mod common;

use std::fmt::Write as _;
use std::path::Path;

use common::{model_a, model_b, model_c, model_e, Rng};
use stochreach_core::sim::{
    exact_chain_probability, run_trials, simulate_reach, Lattice, Outcome, TrialConfig, TrialCounts,
};
use stochreach_core::Semantics;

#[test]
fn deterministic_contraction_never_arrives() {
    let spec = model_c();
    for horizon in [0, 1, 10, 500] {
        let outcome = simulate_reach(&spec, &[0.8], 1, 0, horizon, Semantics::ReachInvariant).unwrap();
        assert_eq!(outcome, Outcome::Censored);
    }
    let config = TrialConfig { seed: 3, horizon: 100, trials: 50, semantics: Semantics::ReachInvariant };
    let counts = run_trials(&spec, &[0.8], &config, 0..50).unwrap();
    assert_eq!(counts, TrialCounts { hits: 0, exits: 0, censored: 50 });
}

#[test]
fn start_in_target_hits_at_step_zero() {
    for (spec, x) in [(model_a(), 0.95), (model_b(), 9.0), (model_e(), 0.8)] {
        let outcome = simulate_reach(&spec, &[x], 9, 4, 100, Semantics::ReachAvoid).unwrap();
        assert_eq!(outcome, Outcome::Hit(0));
    }
}

#[test]
fn separate_target_component_hits_geometrically() {
    // From X0 of the jump model each step enters the target with probability 1/2.
    let spec = model_e();
    let config = TrialConfig { seed: 5, horizon: 60, trials: 4000, semantics: Semantics::ReachInvariant };
    let mut steps = Vec::new();
    for trial in 0..config.trials {
        match simulate_reach(&spec, &[0.15], config.seed, trial, config.horizon, config.semantics).unwrap() {
            Outcome::Hit(s) => steps.push(s as f64),
            other => panic!("unexpected {other:?}"),
        }
    }
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    // Geometric with p = 1/2 has mean 2 and variance 2.
    assert!((mean - 2.0).abs() < 4.0 * (2.0f64 / 4000.0).sqrt(), "{mean}");
}

fn ruin_sequence() -> String {
    let spec = model_b();
    let mut out = String::new();
    for trial in 0..64 {
        let outcome = simulate_reach(&spec, &[5.0], 42, trial, 500, Semantics::ReachAvoid).unwrap();
        let line = match outcome {
            Outcome::Hit(s) => format!("hit {s}"),
            Outcome::Exit(s) => format!("exit {s}"),
            Outcome::Censored => String::from("censored"),
        };
        writeln!(out, "{trial} {line}").unwrap();
    }
    out
}

#[test]
fn ruin_outcomes_match_golden_file() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ruin_seed42.txt");
    let ours = ruin_sequence();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &ours).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file; regenerate with UPDATE_GOLDEN=1");
    assert_eq!(ours, golden);
}

#[test]
fn trial_order_does_not_matter() {
    let spec = model_b();
    let config = TrialConfig { seed: 42, horizon: 500, trials: 2000, semantics: Semantics::ReachAvoid };
    let whole = run_trials(&spec, &[5.0], &config, 0..2000).unwrap();
    let mut parts = TrialCounts::default();
    for chunk in [1300..2000, 0..700, 700..1300] {
        parts = parts.merge(&run_trials(&spec, &[5.0], &config, chunk).unwrap());
    }
    assert_eq!(whole, parts);
}

#[test]
fn avoiding_is_never_likelier_than_reaching() {
    let spec = model_b();
    let mut rng = Rng(2);
    for _ in 0..20 {
        let start = (rng.next_u64() % 9) as f64;
        let seed = rng.next_u64();
        for trial in 0..50 {
            let avoid = simulate_reach(&spec, &[start], seed, trial, 200, Semantics::ReachAvoid).unwrap();
            let reach = simulate_reach(&spec, &[start], seed, trial, 200, Semantics::ReachInvariant).unwrap();
            // Same random stream: a reach-avoid hit is a hit at the same step.
            if let Outcome::Hit(s) = avoid {
                assert_eq!(reach, Outcome::Hit(s));
            }
        }
    }
}

#[test]
fn simulation_agrees_with_exact_chain() {
    let spec = model_b();
    let lattice = Lattice { origin: vec![0.0], step: vec![1.0] };
    let sol = exact_chain_probability(&spec, &lattice, Semantics::ReachAvoid).unwrap();
    for start in 0..9 {
        let exact = sol.at(&[start as f64]).unwrap();
        // Gambler's ruin between -1 and 9.
        assert!((exact - (start as f64 + 1.0) / 10.0).abs() < 1e-9);
        let config = TrialConfig { seed: start, horizon: 2000, trials: 4000, semantics: Semantics::ReachAvoid };
        let counts = run_trials(&spec, &[start as f64], &config, 0..config.trials).unwrap();
        let p = counts.hits as f64 / counts.total() as f64;
        let sd = (exact * (1.0 - exact) / 4000.0).sqrt();
        assert!((p - exact).abs() < 5.0 * sd + 1e-3, "start {start}: {p} vs {exact}");
    }
}
