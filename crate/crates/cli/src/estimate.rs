//! Monte-Carlo estimates with exact binomial confidence intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use stochreach_core::sim::{simulate_reach, Outcome, TrialConfig, TrialCounts};
use stochreach_core::{ProblemSpec, Result, Semantics};

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Exact (Clopper–Pearson) two-sided interval for `hits` successes out of
/// `trials` at the given confidence level.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials);
    assert!(confidence > 0.0 && confidence < 1.0);
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (hits as f64, trials as f64);
    let low = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("positive shape").inverse_cdf(tail)
    };
    let high = if hits == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("positive shape").inverse_cdf(1.0 - tail)
    };
    (low, high)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub hits: u64,
    pub exits: u64,
    pub censored: u64,
    pub trials: u64,
    pub horizon: usize,
    pub semantics: Semantics,
    /// Always "within horizon H": a finite run only bounds the eventual
    /// probability from below.
    pub label: String,
}

impl ProbabilityEstimate {
    pub fn from_counts(counts: &TrialCounts, horizon: usize, semantics: Semantics, confidence: f64) -> Self {
        let trials = counts.total();
        let (ci_low, ci_high) = clopper_pearson(counts.hits, trials, confidence);
        let p_hat = counts.hits as f64 / trials as f64;
        ProbabilityEstimate {
            p_hat,
            // Guard the quantile solver's last-bit error.
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            confidence,
            hits: counts.hits,
            exits: counts.exits,
            censored: counts.censored,
            trials,
            horizon,
            semantics,
            label: format!(
                "probability of reaching Xr within horizon {horizon}; a lower bound on the eventual probability"
            ),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.ci_low <= self.p_hat
            && self.p_hat <= self.ci_high
            && self.hits + self.exits + self.censored == self.trials
    }
}

/// Every trial's outcome, in trial order. Trials run on the current rayon
/// pool; each has its own random stream, so the result does not depend on
/// the number of threads.
pub fn simulate_all(spec: &ProblemSpec, x0: &[f64], config: &TrialConfig) -> Result<Vec<Outcome>> {
    (0..config.trials)
        .into_par_iter()
        .map(|t| simulate_reach(spec, x0, config.seed, t, config.horizon, config.semantics))
        .collect()
}

pub fn count(outcomes: &[Outcome]) -> TrialCounts {
    let mut c = TrialCounts::default();
    for o in outcomes {
        c.record(*o);
    }
    c
}

/// Estimate the probability of hitting `Xr` from `x0` within the horizon.
pub fn estimate_probability(spec: &ProblemSpec, x0: &[f64], config: &TrialConfig) -> Result<ProbabilityEstimate> {
    let outcomes = simulate_all(spec, x0, config)?;
    Ok(ProbabilityEstimate::from_counts(
        &count(&outcomes),
        config.horizon,
        config.semantics,
        DEFAULT_CONFIDENCE,
    ))
}
