//! One obligation compiler per proposition.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::bounds::{require_k, require_nonneg, require_open_unit, require_beta, require_positive, require_threshold, require_unit_half_open};
use super::{Certificate, CertifyConfig, PropositionId, DEFAULT_DELTA};
use crate::expectation::ExpectationOperator;
use crate::geometry::{boundary_faces, region_difference, RegionSpec};
use crate::model::{check_assumption1, Mode, ProblemSpec};
use crate::poly::Polynomial;
use crate::regioncheck::{CheckOutcome, SignObligation, Status};
use crate::{Error, Result};

pub const DOMAIN_X0: &str = "X0";
pub const DOMAIN_X: &str = "X";
pub const DOMAIN_XR: &str = "Xr";
pub const DOMAIN_X_MINUS_XR: &str = "X\\Xr";
pub const DOMAIN_BOUNDARY: &str = "dX\\dXr";
pub const DOMAIN_XHAT_MINUS_X: &str = "Xhat\\X";

#[derive(Clone, Debug, PartialEq)]
pub enum ObligationKind {
    Sign(SignObligation),
    /// `v(x) - E[v(x~(k))] >= margin` for the process frozen on `Xr`.
    Stopped {
        v: Polynomial,
        k: usize,
        region: RegionSpec,
        margin: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledObligation {
    pub label: &'static str,
    pub domain: &'static str,
    pub kind: ObligationKind,
}

impl CompiledObligation {
    pub fn region(&self) -> &RegionSpec {
        match &self.kind {
            ObligationKind::Sign(s) => &s.region,
            ObligationKind::Stopped { region, .. } => region,
        }
    }

    pub fn margin(&self) -> f64 {
        match &self.kind {
            ObligationKind::Sign(s) => s.margin,
            ObligationKind::Stopped { margin, .. } => *margin,
        }
    }
}

/// Compiles certificates against one problem; the invariance verdict is
/// computed once.
#[derive(Debug)]
pub struct Compiler<'a> {
    spec: &'a ProblemSpec,
    config: CertifyConfig,
    invariance: CheckOutcome,
    x_minus_xr: RegionSpec,
    xhat_minus_x: RegionSpec,
}

struct Regions<'r> {
    x0: &'r RegionSpec,
    x: &'r RegionSpec,
    xr: &'r RegionSpec,
    x_minus_xr: &'r RegionSpec,
    xhat_minus_x: Option<&'r RegionSpec>,
}

struct Builder<'r> {
    out: Vec<CompiledObligation>,
    regions: Regions<'r>,
}

impl<'r> Builder<'r> {
    fn push(&mut self, label: &'static str, domain: &'static str, poly: Polynomial, margin: f64) {
        let region = match domain {
            DOMAIN_X0 => self.regions.x0.clone(),
            DOMAIN_X => self.regions.x.clone(),
            DOMAIN_XR => self.regions.xr.clone(),
            DOMAIN_X_MINUS_XR => self.regions.x_minus_xr.clone(),
            DOMAIN_XHAT_MINUS_X => match self.regions.xhat_minus_x {
                Some(r) => r.clone(),
                None => return,
            },
            _ => unreachable!("boundary obligations use push_region"),
        };
        self.push_region(label, domain, poly, region, margin);
    }

    fn push_region(&mut self, label: &'static str, domain: &'static str, poly: Polynomial, region: RegionSpec, margin: f64) {
        self.out.push(CompiledObligation {
            label,
            domain,
            kind: ObligationKind::Sign(SignObligation::ge(label, poly, region).with_margin(margin)),
        });
    }
}

fn constant_minus(c: f64, p: &Polynomial) -> Polynomial {
    (-p).add_constant(c)
}

impl<'a> Compiler<'a> {
    pub fn new(spec: &'a ProblemSpec, config: CertifyConfig) -> Self {
        let invariance = check_assumption1(spec, &config.check);
        Compiler {
            spec,
            config,
            invariance,
            x_minus_xr: region_difference(spec.x(), spec.xr()),
            xhat_minus_x: region_difference(spec.xhat(), spec.x()),
        }
    }

    pub fn spec(&self) -> &'a ProblemSpec {
        self.spec
    }

    pub fn config(&self) -> &CertifyConfig {
        &self.config
    }

    pub fn invariance(&self) -> &CheckOutcome {
        &self.invariance
    }

    pub fn invariance_proved(&self) -> bool {
        self.invariance.status == Status::Proved
    }

    /// Whether obligations on `Xhat \ X` are emitted for `prop`.
    pub fn emits_xhat_rows(&self, prop: PropositionId) -> bool {
        match prop {
            PropositionId::P6Xhat => true,
            p if p.uses_xhat() => !(self.spec.mode() == Mode::AssumedInvariant && self.invariance_proved()),
            _ => false,
        }
    }

    pub fn assumptions_used(&self, prop: PropositionId) -> Vec<String> {
        let mut out = Vec::new();
        if prop.needs_invariance() {
            out.push(String::from("X invariant under every disturbance (proved)"));
        }
        if self.emits_xhat_rows(prop) {
            let how = if self.spec.xhat_defaulted() {
                "computed"
            } else {
                "supplied, validated"
            };
            out.push(format!("Xhat contains X and its one-step image ({how})"));
        } else if prop.uses_xhat() {
            out.push(String::from("X invariant (proved); Xhat \\ X obligations omitted"));
        }
        out.push(String::from("regions are bounded boxes"));
        out
    }

    pub fn notes(&self, prop: PropositionId) -> Vec<String> {
        let mut out = Vec::new();
        match prop {
            PropositionId::P15 => out.push(String::from(
                "the bound follows the statement's direction P <= eps' + (k-1)c/2; the published proof ends with the reversed inequality",
            )),
            PropositionId::P12 => out.push(String::from(
                "the conclusion is read as conditioning on X0, matching the use of eps' on X0",
            )),
            PropositionId::P14 | PropositionId::P14Alpha => out.push(String::from(
                "v and w are typed on Xhat but constrained on X only; obligations are compiled on X",
            )),
            PropositionId::P3 => out.push(format!(
                "strict inequality v < c on Xr checked with slack {:e}",
                self.config.strict_margin
            )),
            _ => {}
        }
        if prop.semantics() == crate::model::Semantics::ReachAvoid {
            out.push(String::from("probability of reaching Xr while staying inside X"));
        }
        out
    }

    fn require_invariance(&self, prop: PropositionId) -> Result<()> {
        if prop.needs_invariance() && !self.invariance_proved() {
            let verdict = match self.invariance.status {
                Status::Disproved => "disproved",
                _ => "not proved",
            };
            return Err(Error::Incompatible(format!(
                "{prop} requires X to be invariant, which is {verdict}; use one of the Xhat variants (P6, P8, P9, P10, P11, P12)"
            )));
        }
        Ok(())
    }

    /// Build the obligation list of `prop` for `cert`, in a fixed order.
    pub fn compile(&self, prop: PropositionId, cert: &Certificate) -> Result<Vec<CompiledObligation>> {
        use PropositionId::*;
        self.require_invariance(prop)?;
        let spec = self.spec;
        let n = spec.state_dim();
        let v = &cert.v;
        if v.arity() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                found: v.arity(),
            });
        }
        let zero = Polynomial::zero(n);
        let w = cert.w.as_ref().unwrap_or(&zero);
        if w.arity() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                found: w.arity(),
            });
        }
        let params = &cert.params;
        let op = ExpectationOperator::new(spec);
        let eps = || match prop.threshold() {
            Some(t) => require_threshold(params.threshold(t), t),
            None => Ok(0.0),
        };
        let mut b = Builder {
            out: Vec::new(),
            regions: Regions {
                x0: spec.x0(),
                x: spec.x(),
                xr: spec.xr(),
                x_minus_xr: &self.x_minus_xr,
                xhat_minus_x: if self.emits_xhat_rows(prop) {
                    Some(&self.xhat_minus_x)
                } else {
                    None
                },
            },
        };
        match prop {
            P1 => {
                let e = eps()?;
                let tv = op.apply(v)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
                b.push("supermartingale", DOMAIN_X, v - &tv, 0.0);
                b.push("nonnegative", DOMAIN_X, v.clone(), 0.0);
            }
            P2 => {
                let e = eps()?;
                let delta = require_positive(Some(params.delta.unwrap_or(DEFAULT_DELTA)), "delta")?;
                let boundary = boundary_faces(spec.x(), spec.xr())?;
                let tv = op.apply(v)?;
                b.push("init", DOMAIN_X0, constant_minus(1.0 - e, v), 0.0);
                b.push_region("boundary", DOMAIN_BOUNDARY, v.add_constant(-1.0), boundary, 0.0);
                b.push("decrease", DOMAIN_X_MINUS_XR, v - &tv, delta);
                b.push("nonnegative", DOMAIN_X, v.clone(), 0.0);
            }
            P3 => {
                let c = require_positive(params.c, "c")?;
                let tv = op.apply(v)?;
                b.push("level_outside", DOMAIN_X_MINUS_XR, v.add_constant(-c), 0.0);
                b.push("level_target", DOMAIN_XR, constant_minus(c, v), self.config.strict_margin);
                b.push("decrease", DOMAIN_X_MINUS_XR, v - &tv, 1.0);
                b.push("nonnegative", DOMAIN_X, v.clone(), 0.0);
            }
            P4 => {
                let e = eps()?;
                let k = require_k(params.k)?;
                let c = require_nonneg(params.c, "c")?;
                let tv = op.apply(v)?;
                let tkv = op.apply_k(v, k)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
                b.push("one_step", DOMAIN_X, (v - &tv).add_constant(c), 0.0);
                b.push("k_step", DOMAIN_X, v - &tkv, 0.0);
                b.push("nonnegative", DOMAIN_X, v.clone(), 0.0);
            }
            P5 => {
                let e = eps()?;
                let k = require_k(params.k)?;
                let c = require_nonneg(params.c, "c")?;
                let delta = require_positive(Some(params.delta.unwrap_or(DEFAULT_DELTA)), "delta")?;
                let boundary = boundary_faces(spec.x(), spec.xr())?;
                let tv = op.apply(v)?;
                let tkv = op.apply_k(v, k)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push_region("boundary", DOMAIN_BOUNDARY, v.add_constant(-1.0), boundary, 0.0);
                b.push("one_step", DOMAIN_X_MINUS_XR, (v - &tv).add_constant(c), 0.0);
                b.push("k_step", DOMAIN_X_MINUS_XR, v - &tkv, delta);
                b.push("nonnegative", DOMAIN_X, v.clone(), 0.0);
            }
            P6 | P6Xhat => {
                let e = eps()?;
                let tv = op.apply(v)?;
                let tw = op.apply(w)?;
                b.push("init", DOMAIN_X0, v.add_constant(-e), 0.0);
                b.push("submartingale", DOMAIN_X_MINUS_XR, &tv - v, 0.0);
                b.push("w_coupling", DOMAIN_X_MINUS_XR, &(&tw - w) - v, 0.0);
                b.push("target", DOMAIN_XR, constant_minus(1.0, v), 0.0);
                b.push("outside", DOMAIN_XHAT_MINUS_X, -v, 0.0);
            }
            P7 | P8 => {
                let e = eps()?;
                let tv = op.apply(v)?;
                let tw = op.apply(w)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push("supermartingale", DOMAIN_X_MINUS_XR, v - &tv, 0.0);
                b.push("w_coupling", DOMAIN_X_MINUS_XR, v - &(&tw - w), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
                if prop == P8 {
                    b.push("outside", DOMAIN_XHAT_MINUS_X, v.clone(), 0.0);
                }
            }
            P9 => {
                let e = eps()?;
                let lambda = require_positive(params.lambda, "lambda")?;
                let tv = op.apply(v)?;
                b.push("init", DOMAIN_X0, v.add_constant(-e), 0.0);
                b.push("lambda_step", DOMAIN_X_MINUS_XR, &(&tv - v).scale(lambda) - v, 0.0);
                b.push("target", DOMAIN_XR, constant_minus(1.0, v), 0.0);
                b.push("outside", DOMAIN_XHAT_MINUS_X, -v, 0.0);
            }
            P10 => {
                let e = eps()?;
                let lambda = require_positive(params.lambda, "lambda")?;
                let tv = op.apply(v)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push("lambda_step", DOMAIN_X_MINUS_XR, v - &(&tv - v).scale(lambda), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
                b.push("outside", DOMAIN_XHAT_MINUS_X, v.clone(), 0.0);
            }
            P11 | P12 => {
                let e = eps()?;
                let at = if prop == P11 {
                    require_unit_half_open(params.alpha_tilde, "alpha_tilde")?
                } else {
                    require_open_unit(params.alpha_tilde, "alpha_tilde")?
                };
                let bt = require_beta(params.beta_tilde)?;
                let tv = op.apply(v)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push("discounted", DOMAIN_X_MINUS_XR, (v - &tv.scale(at)).add_constant(at * bt), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
                if prop == P11 {
                    b.push("nonnegative", DOMAIN_X_MINUS_XR, v.clone(), 0.0);
                    b.push("outside", DOMAIN_XHAT_MINUS_X, v.clone(), 0.0);
                } else {
                    b.push("outside", DOMAIN_XHAT_MINUS_X, v.add_constant(at * bt / (1.0 - at)), 0.0);
                }
            }
            P13 => {
                let e = eps()?;
                let k = require_k(params.k)?;
                let tkv = op.apply_k(v, k)?;
                let tkw = op.apply_k(w, k)?;
                b.push("init", DOMAIN_X0, v.add_constant(-(1.0 - e)), 0.0);
                b.push("k_submartingale", DOMAIN_X_MINUS_XR, &tkv - v, 0.0);
                b.push("w_coupling", DOMAIN_X_MINUS_XR, &(&tkw - w) - v, 0.0);
                b.push("target", DOMAIN_XR, constant_minus(1.0, v), 0.0);
            }
            P14 | P14Alpha => {
                let e = eps()?;
                let k = require_k(params.k)?;
                let tv = op.apply(v)?;
                let tkv = op.apply_k(v, k)?;
                let tkw = op.apply_k(w, k)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                if prop == P14 {
                    let c = require_nonneg(params.c, "c")?;
                    b.push("one_step", DOMAIN_X, (v - &tv).add_constant(c), 0.0);
                } else {
                    let alpha = require_positive(params.alpha, "alpha")?;
                    b.push("one_step", DOMAIN_X, &v.scale(alpha) - &tv, 0.0);
                }
                b.push("k_step", DOMAIN_X_MINUS_XR, v - &tkv, 0.0);
                b.push("w_coupling", DOMAIN_X_MINUS_XR, v - &(&tkw - w), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
            }
            P15 => {
                let e = eps()?;
                let k = require_k(params.k)?;
                let c = require_nonneg(params.c, "c")?;
                let tv = op.apply(v)?;
                let tw = op.apply(w)?;
                b.push("init", DOMAIN_X0, constant_minus(e, v), 0.0);
                b.push("one_step", DOMAIN_X_MINUS_XR, (v - &tv).add_constant(c), 0.0);
                b.out.push(CompiledObligation {
                    label: "stopped_k_step",
                    domain: DOMAIN_X,
                    kind: ObligationKind::Stopped {
                        v: v.clone(),
                        k,
                        region: spec.x().clone(),
                        margin: 0.0,
                    },
                });
                b.push("w_coupling", DOMAIN_X_MINUS_XR, v - &(&tw - w), 0.0);
                b.push("target", DOMAIN_XR, v.add_constant(-1.0), 0.0);
            }
        }
        Ok(b.out)
    }
}

/// The domains `compile` emits for `prop` when `Xhat \ X` rows are on, in
/// order. Used by tests and the synthesizer to size sample sets.
pub fn transcription(prop: PropositionId) -> Vec<&'static str> {
    use PropositionId::*;
    match prop {
        P1 => vec![DOMAIN_X0, DOMAIN_XR, DOMAIN_X, DOMAIN_X],
        P2 => vec![DOMAIN_X0, DOMAIN_BOUNDARY, DOMAIN_X_MINUS_XR, DOMAIN_X],
        P3 => vec![DOMAIN_X_MINUS_XR, DOMAIN_XR, DOMAIN_X_MINUS_XR, DOMAIN_X],
        P4 => vec![DOMAIN_X0, DOMAIN_XR, DOMAIN_X, DOMAIN_X, DOMAIN_X],
        P5 => vec![DOMAIN_X0, DOMAIN_BOUNDARY, DOMAIN_X_MINUS_XR, DOMAIN_X_MINUS_XR, DOMAIN_X],
        P6 | P6Xhat => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_X_MINUS_XR, DOMAIN_XR, DOMAIN_XHAT_MINUS_X],
        P7 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_X_MINUS_XR, DOMAIN_XR],
        P8 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_X_MINUS_XR, DOMAIN_XR, DOMAIN_XHAT_MINUS_X],
        P9 | P10 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_XR, DOMAIN_XHAT_MINUS_X],
        P11 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_XR, DOMAIN_X_MINUS_XR, DOMAIN_XHAT_MINUS_X],
        P12 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_XR, DOMAIN_XHAT_MINUS_X],
        P13 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_X_MINUS_XR, DOMAIN_XR],
        P14 | P14Alpha => vec![DOMAIN_X0, DOMAIN_X, DOMAIN_X_MINUS_XR, DOMAIN_X_MINUS_XR, DOMAIN_XR],
        P15 => vec![DOMAIN_X0, DOMAIN_X_MINUS_XR, DOMAIN_X, DOMAIN_X_MINUS_XR, DOMAIN_XR],
    }
}
