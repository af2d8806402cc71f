//! Branch-and-bound decision of `p(x) >= margin` (or `<=`) over box unions.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{Hyperbox, RegionSpec};
use crate::poly::{enclose_range, Polynomial};
use crate::{Error, Result};

/// Boxes with at most this many dimensions get their corners tried as
/// witnesses in addition to the center.
const CORNER_WITNESS_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `p(x) >= margin`
    GeZero,
    /// `p(x) <= -margin`
    LeZero,
}

/// One universally quantified inequality over a region.
#[derive(Clone, Debug, PartialEq)]
pub struct SignObligation {
    pub poly: Polynomial,
    pub region: RegionSpec,
    pub sense: Sense,
    /// Required slack, `>= 0`.
    pub margin: f64,
    pub label: String,
}

impl SignObligation {
    pub fn ge(label: impl Into<String>, poly: Polynomial, region: RegionSpec) -> Self {
        SignObligation {
            poly,
            region,
            sense: Sense::GeZero,
            margin: 0.0,
            label: label.into(),
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// The polynomial whose value must be `>= margin`.
    pub fn normalized(&self) -> Polynomial {
        match self.sense {
            Sense::GeZero => self.poly.clone(),
            Sense::LeZero => -&self.poly,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Proved,
    Disproved,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    /// Value of the checked expression at the point, when it has one.
    pub value: Option<f64>,
    /// Disturbance support index, for witnesses of a single transition.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub disturbance: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub status: Status,
    pub witness: Option<Witness>,
    /// Undecided boxes when the status is `Unknown`.
    pub frontier: Vec<Hyperbox>,
    pub boxes_examined: usize,
    pub max_depth: usize,
}

impl CheckOutcome {
    pub fn proved() -> Self {
        CheckOutcome {
            status: Status::Proved,
            witness: None,
            frontier: Vec::new(),
            boxes_examined: 0,
            max_depth: 0,
        }
    }

    pub fn is_proved(&self) -> bool {
        self.status == Status::Proved
    }
}

/// Knobs shared by all branch-and-bound procedures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Maximum bisection depth below each region piece.
    pub depth_limit: usize,
    /// Conservative tolerance `eta`: a claim `q >= m` is accepted when the
    /// enclosure gives `q >= m - eta`, and refuted only when `q < m - eta`
    /// at a concrete point.
    pub tolerance: f64,
    /// Work cap per obligation; exhausted work yields `Unknown`.
    pub max_boxes: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            depth_limit: 14,
            tolerance: 1e-9,
            max_boxes: 400_000,
        }
    }
}

/// Generic depth-first branch and bound over the pieces of a region.
///
/// `decide` classifies a box as certified (`Some(true)`), refuted with a
/// witness (`Err(witness)`), or undecided (`Ok(None)`). Children are visited
/// lower half first, so the first witness found is in the lexicographically
/// smallest undecided box.
pub(crate) fn branch_and_bound<F>(region: &RegionSpec, config: &CheckConfig, mut decide: F) -> CheckOutcome
where
    F: FnMut(&Hyperbox) -> core::result::Result<bool, Witness>,
{
    let mut frontier = Vec::new();
    let mut examined = 0usize;
    let mut max_depth = 0usize;
    for piece in &region.pieces {
        let mut stack = vec![(piece.clone(), 0usize)];
        while let Some((b, depth)) = stack.pop() {
            if examined >= config.max_boxes {
                frontier.push(b);
                frontier.extend(stack.drain(..).rev().map(|(b, _)| b));
                break;
            }
            examined += 1;
            max_depth = max_depth.max(depth);
            match decide(&b) {
                Ok(true) => {}
                Err(w) => {
                    return CheckOutcome {
                        status: Status::Disproved,
                        witness: Some(w),
                        frontier: Vec::new(),
                        boxes_examined: examined,
                        max_depth,
                    }
                }
                Ok(false) => {
                    if depth >= config.depth_limit {
                        frontier.push(b);
                        continue;
                    }
                    match b.bisect() {
                        Some((l, r)) => {
                            stack.push((r, depth + 1));
                            stack.push((l, depth + 1));
                        }
                        None => frontier.push(b),
                    }
                }
            }
        }
    }
    CheckOutcome {
        status: if frontier.is_empty() {
            Status::Proved
        } else {
            Status::Unknown
        },
        witness: None,
        frontier,
        boxes_examined: examined,
        max_depth,
    }
}

/// Candidate witness points of a box: center first, then corners.
pub(crate) fn probe_points(b: &Hyperbox) -> Vec<Vec<f64>> {
    let mut pts = vec![b.center()];
    if b.dim() <= CORNER_WITNESS_DIM {
        pts.extend(b.corners());
    }
    pts
}

/// Decide `p >= margin` (or `p <= -margin`) on every point of the region.
pub fn prove_sign(ob: &SignObligation, config: &CheckConfig) -> CheckOutcome {
    assert_eq!(ob.poly.arity(), ob.region.arity, "region arity must match");
    let q = ob.normalized();
    let threshold = ob.margin - config.tolerance;
    branch_and_bound(&ob.region, config, |b| {
        let enc = enclose_range(&q, &b.intervals);
        if enc.lo >= threshold {
            return Ok(true);
        }
        for pt in probe_points(b) {
            if q.eval_enclosure(&pt).hi < threshold {
                let value = ob.poly.eval(&pt);
                return Err(Witness {
                    point: pt,
                    value: Some(value),
                    disturbance: None,
                });
            }
        }
        Ok(false)
    })
}

/// Certified upper bound on `sup p` over a non-empty region.
pub fn bound_supremum(p: &Polynomial, region: &RegionSpec, config: &CheckConfig) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut best_point = f64::NEG_INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for piece in &region.pieces {
        let mut stack = vec![(piece.clone(), 0usize)];
        while let Some((b, depth)) = stack.pop() {
            let enc = enclose_range(p, &b.intervals);
            if enc.hi <= best_point {
                continue;
            }
            best_point = best_point.max(p.eval_enclosure(&b.center()).hi);
            if enc.hi <= best_point {
                continue;
            }
            if depth >= config.depth_limit {
                upper = upper.max(enc.hi);
                continue;
            }
            match b.bisect() {
                Some((l, r)) => {
                    stack.push((r, depth + 1));
                    stack.push((l, depth + 1));
                }
                None => upper = upper.max(enc.hi),
            }
        }
    }
    Ok(upper.max(best_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn interval_region(lo: f64, hi: f64) -> RegionSpec {
        RegionSpec::from_box(Hyperbox::from_bounds(&[(lo, hi)]))
    }

    fn check(text: &str, lo: f64, hi: f64) -> CheckOutcome {
        let ob = SignObligation::ge("t", parse_poly(text, &["x"]).unwrap(), interval_region(lo, hi));
        prove_sign(&ob, &CheckConfig::default())
    }

    #[test]
    fn positive_square_plus_one() {
        assert_eq!(check("x^2 + 1", -1.0, 1.0).status, Status::Proved);
    }

    #[test]
    fn refuted_at_center() {
        let out = check("0.75*x^2 - 0.0025", -0.1, 0.1);
        assert_eq!(out.status, Status::Disproved);
        let w = out.witness.unwrap();
        assert_eq!(w.point, vec![0.0]);
        assert_eq!(w.value, Some(-0.0025));
    }

    #[test]
    fn weak_inequality_at_endpoint() {
        assert_eq!(check("x", 0.0, 1.0).status, Status::Proved);
    }

    #[test]
    fn touching_zero_in_interior_is_unknown_or_proved() {
        // (x - 1/3)^2 >= 0 touches zero at a non-dyadic point.
        let out = check("x^2 - 0.6666666666666666*x + 0.1111111111111111", 0.0, 1.0);
        assert_ne!(out.status, Status::Disproved);
    }

    #[test]
    fn supremum_examples() {
        let cfg = CheckConfig {
            depth_limit: 4,
            ..CheckConfig::default()
        };
        let three = Polynomial::constant(1, 3.0);
        assert_eq!(bound_supremum(&three, &interval_region(0.0, 1.0), &cfg).unwrap(), 3.0);
        let lin = parse_poly("2*x + 1", &["x"]).unwrap();
        assert_eq!(bound_supremum(&lin, &interval_region(0.0, 1.0), &cfg).unwrap(), 3.0);
        let sq = parse_poly("x^2", &["x"]).unwrap();
        let u = bound_supremum(&sq, &interval_region(-1.0, 1.0), &cfg).unwrap();
        assert!((1.0..=1.25).contains(&u));
        assert_eq!(
            bound_supremum(&sq, &RegionSpec::empty(1), &cfg),
            Err(Error::EmptyRegion)
        );
    }
}
