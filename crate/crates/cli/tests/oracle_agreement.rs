mod common;

use common::{fixture, run};
use stochreach::estimate::{clopper_pearson, estimate_probability};
use stochreach::format::load_problem;
use stochreach::report::CommandResult;
use stochreach_core::sim::{exact_chain_probability, Lattice, TrialConfig};
use stochreach_core::Semantics;

#[test]
fn estimates_cover_the_exact_chain() {
    let spec = load_problem(&fixture("model-b.prob")).unwrap().spec;
    let lattice = Lattice { origin: vec![0.0], step: vec![1.0] };
    let exact = exact_chain_probability(&spec, &lattice, Semantics::ReachAvoid).unwrap();
    let mut covered = 0;
    let mut cases = 0;
    for seed in 0..20u64 {
        let start = (seed % 9) as f64;
        let truth = exact.at(&[start]).unwrap();
        let config = TrialConfig { seed, horizon: 1000, trials: 3000, semantics: Semantics::ReachAvoid };
        let est = estimate_probability(&spec, &[start], &config).unwrap();
        assert!(est.is_consistent());
        cases += 1;
        if est.ci_low <= truth && truth <= est.ci_high {
            covered += 1;
        }
    }
    // 99% intervals: missing more than two of twenty is a one-in-a-thousand event.
    assert!(covered >= cases - 2, "{covered} of {cases} intervals cover the exact value");
}

#[test]
fn interval_reference_values() {
    // Reference values from an independent beta-quantile implementation.
    let (lo, hi) = clopper_pearson(50, 100, 0.99);
    assert!((lo - 0.368861437358924).abs() < 1e-9);
    assert!((hi - 0.631138562641076).abs() < 1e-9);
    assert_eq!(clopper_pearson(0, 10, 0.99).0, 0.0);
    assert_eq!(clopper_pearson(10, 10, 0.99).1, 1.0);
}

#[test]
fn oracle_command_reports_the_ruin_probabilities() {
    let out = run(&["oracle", "--problem", "fixtures/model-b.prob"]);
    assert_eq!(out.code, 0);
    let CommandResult::Oracle(result) = out.report().result else { panic!("oracle result expected") };
    assert!(result.direct);
    assert_eq!(result.starts.len(), 1);
    assert!((result.starts[0].probability - 0.6).abs() < 1e-9);
    for state in &result.states {
        let x = state.x[0];
        let expected = if x >= 9.0 { 1.0 } else if x < 0.0 { 0.0 } else { (x + 1.0) / 10.0 };
        assert!((state.probability - expected).abs() < 1e-9, "{x}: {}", state.probability);
    }
}
