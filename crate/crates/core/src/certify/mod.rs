//! Certificate checking: proposition compilers, closed-form bounds and the
//! constructions that turn one certificate family into another.

mod bounds;
mod compile;
mod embed;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::expectation::stopped_expectation_check;
use crate::model::{ProblemSpec, Semantics};
use crate::poly::Polynomial;
use crate::regioncheck::{prove_sign, CheckConfig, CheckOutcome, Sense, SignObligation, Status};
use crate::{Error, Result};

pub use bounds::{bound_kind, certified_bound, Bound, BoundKind, Horizon};
pub use compile::{
    transcription, CompiledObligation, Compiler, ObligationKind, DOMAIN_BOUNDARY, DOMAIN_X, DOMAIN_X0, DOMAIN_XHAT_MINUS_X,
    DOMAIN_XR, DOMAIN_X_MINUS_XR,
};
pub use embed::{dualize, embed_supermartingale, embed_zero_w, embedding_supremum};

/// Default strict-inequality slack.
pub const DEFAULT_STRICT_MARGIN: f64 = 1e-6;
/// Default decrease margin for the propositions that take one.
pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PropositionId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    #[serde(rename = "P6-xhat")]
    P6Xhat,
    P7,
    P8,
    P9,
    P10,
    P11,
    P12,
    P13,
    P14,
    #[serde(rename = "P14-alpha")]
    P14Alpha,
    P15,
}

impl PropositionId {
    pub const ALL: [PropositionId; 17] = [
        PropositionId::P1,
        PropositionId::P2,
        PropositionId::P3,
        PropositionId::P4,
        PropositionId::P5,
        PropositionId::P6,
        PropositionId::P6Xhat,
        PropositionId::P7,
        PropositionId::P8,
        PropositionId::P9,
        PropositionId::P10,
        PropositionId::P11,
        PropositionId::P12,
        PropositionId::P13,
        PropositionId::P14,
        PropositionId::P14Alpha,
        PropositionId::P15,
    ];

    pub fn as_str(&self) -> &'static str {
        use PropositionId::*;
        match self {
            P1 => "P1",
            P2 => "P2",
            P3 => "P3",
            P4 => "P4",
            P5 => "P5",
            P6 => "P6",
            P6Xhat => "P6-xhat",
            P7 => "P7",
            P8 => "P8",
            P9 => "P9",
            P10 => "P10",
            P11 => "P11",
            P12 => "P12",
            P13 => "P13",
            P14 => "P14",
            P14Alpha => "P14-alpha",
            P15 => "P15",
        }
    }

    /// Whether the conditions are only sound when `X` is invariant.
    pub fn needs_invariance(&self) -> bool {
        use PropositionId::*;
        matches!(self, P1 | P2 | P3 | P4 | P5 | P7 | P13 | P14 | P14Alpha | P15)
    }

    /// Whether the conditions carry obligations on `Xhat \ X`.
    pub fn uses_xhat(&self) -> bool {
        use PropositionId::*;
        matches!(self, P6 | P6Xhat | P8 | P9 | P10 | P11 | P12)
    }

    /// Whether the certificate has a second function `w`.
    pub fn uses_w(&self) -> bool {
        use PropositionId::*;
        matches!(self, P6 | P6Xhat | P7 | P8 | P13 | P14 | P14Alpha | P15)
    }

    /// The probability event the bound refers to.
    pub fn semantics(&self) -> Semantics {
        if self.uses_xhat() {
            Semantics::ReachAvoid
        } else {
            Semantics::ReachInvariant
        }
    }

    /// Which threshold parameter the bound is stated in, if any.
    pub fn threshold(&self) -> Option<Threshold> {
        use PropositionId::*;
        match self {
            P3 => None,
            P1 | P2 | P6 | P6Xhat | P7 | P8 | P9 => Some(Threshold::Eps),
            _ => Some(Threshold::EpsPrime),
        }
    }
}

impl fmt::Display for PropositionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropositionId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PropositionId::ALL
            .iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Incompatible(alloc::format!("unknown proposition `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    Eps,
    EpsPrime,
}

/// Scalar parameters of a certificate; each proposition reads a subset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Horizon of the finite-time bounds.
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_prime: Option<f64>,
    /// Scale of the `w = M * v` construction.
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub scale_m: Option<f64>,
}

impl Params {
    pub fn threshold(&self, t: Threshold) -> Option<f64> {
        match t {
            Threshold::Eps => self.eps,
            Threshold::EpsPrime => self.eps_prime,
        }
    }

    pub fn set_threshold(&mut self, t: Threshold, value: f64) {
        match t {
            Threshold::Eps => self.eps = Some(value),
            Threshold::EpsPrime => self.eps_prime = Some(value),
        }
    }
}

/// Candidate functions plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub v: Polynomial,
    pub w: Option<Polynomial>,
    pub params: Params,
}

/// Settings for compiling and checking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub check: CheckConfig,
    /// Slack used for strict inequalities.
    pub strict_margin: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            check: CheckConfig::default(),
            strict_margin: DEFAULT_STRICT_MARGIN,
        }
    }
}

/// One checked obligation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObligationResult {
    pub label: String,
    pub domain: String,
    pub sense: Sense,
    pub margin: f64,
    pub outcome: CheckOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub prop: PropositionId,
    pub obligations: Vec<ObligationResult>,
    pub bound: Option<Bound>,
    pub assumptions_used: Vec<String>,
    pub notes: Vec<String>,
    pub tolerance: f64,
    pub strict_margin: f64,
    pub depth_limit: usize,
}

impl CertReport {
    /// Proved if every obligation is; otherwise the first refutation wins,
    /// then unknown.
    pub fn status(&self) -> Status {
        if self.obligations.iter().any(|o| o.outcome.status == Status::Disproved) {
            Status::Disproved
        } else if self.obligations.iter().all(|o| o.outcome.status == Status::Proved) {
            Status::Proved
        } else {
            Status::Unknown
        }
    }
}

/// Decide one compiled obligation.
pub fn check_obligation(spec: &ProblemSpec, ob: &CompiledObligation, config: &CheckConfig) -> Result<CheckOutcome> {
    match &ob.kind {
        ObligationKind::Sign(s) => Ok(prove_sign(s, config)),
        ObligationKind::Stopped { v, k, region, margin } => {
            stopped_expectation_check(spec, v, *k, region, *margin, config)
        }
    }
}

/// Combine per-obligation outcomes (in compile order) into a report.
pub fn assemble_report(
    prop: PropositionId,
    cert: &Certificate,
    compiler: &Compiler<'_>,
    obligations: &[CompiledObligation],
    outcomes: Vec<CheckOutcome>,
) -> Result<CertReport> {
    let results: Vec<ObligationResult> = obligations
        .iter()
        .zip(outcomes)
        .map(|(ob, outcome)| {
            let (sense, margin) = match &ob.kind {
                ObligationKind::Sign(SignObligation { sense, margin, .. }) => (*sense, *margin),
                ObligationKind::Stopped { margin, .. } => (Sense::GeZero, *margin),
            };
            ObligationResult {
                label: String::from(ob.label),
                domain: String::from(ob.domain),
                sense,
                margin,
                outcome,
            }
        })
        .collect();
    let all_proved = results.iter().all(|r| r.outcome.is_proved());
    let bound = if all_proved {
        Some(certified_bound(prop, &cert.params)?)
    } else {
        None
    };
    let config = compiler.config();
    Ok(CertReport {
        prop,
        obligations: results,
        bound,
        assumptions_used: compiler.assumptions_used(prop),
        notes: compiler.notes(prop),
        tolerance: config.check.tolerance,
        strict_margin: config.strict_margin,
        depth_limit: config.check.depth_limit,
    })
}

/// Compile and check a certificate sequentially.
pub fn check_certificate(
    prop: PropositionId,
    cert: &Certificate,
    spec: &ProblemSpec,
    config: &CertifyConfig,
) -> Result<CertReport> {
    let compiler = Compiler::new(spec, *config);
    check_with(&compiler, prop, cert)
}

/// Check with an existing compiler (reuses its invariance verdict).
pub fn check_with(compiler: &Compiler<'_>, prop: PropositionId, cert: &Certificate) -> Result<CertReport> {
    let obligations = compiler.compile(prop, cert)?;
    let outcomes = obligations
        .iter()
        .map(|ob| check_obligation(compiler.spec(), ob, &compiler.config().check))
        .collect::<Result<Vec<_>>>()?;
    assemble_report(prop, cert, compiler, &obligations, outcomes)
}
