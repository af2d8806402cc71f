//! Dynamics, disturbance, regions, and the invariance check.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{Hyperbox, RegionSpec};
use crate::interval::Interval;
use crate::poly::{enclose_range, Polynomial};
use crate::regioncheck::{branch_and_bound, probe_points, CheckConfig, CheckOutcome, Witness};
use crate::{Error, Result};

/// Tolerance on the total probability mass.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Finite-support distribution of the i.i.d. disturbance.
#[derive(Clone, Debug, PartialEq)]
pub struct Disturbance {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl Disturbance {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidProblem(String::from(m)));
        if support.is_empty() {
            return bad("disturbance support is empty");
        }
        if support.len() != probs.len() {
            return bad("support and probs have different lengths");
        }
        let dim = support[0].len();
        if support.iter().any(|t| t.len() != dim) {
            return bad("support points have different dimensions");
        }
        if support.iter().flatten().any(|v| !v.is_finite()) {
            return bad("support point has a non-finite coordinate");
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("every probability must be positive");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return bad("distribution not normalized");
        }
        for i in 0..support.len() {
            for j in 0..i {
                if support[i] == support[j] {
                    return bad("support points are not distinct");
                }
            }
        }
        Ok(Disturbance { support, probs })
    }

    /// Point mass at `theta`.
    pub fn point_mass(theta: Vec<f64>) -> Self {
        Disturbance {
            support: alloc::vec![theta],
            probs: alloc::vec![1.0],
        }
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Support index selected by a uniform draw `u` in `[0, 1)`.
    pub fn index_for(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// `x(l+1) = f(x(l), theta(l))` with polynomial components over `(x, theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    state_dim: usize,
    dist_dim: usize,
    dynamics: Vec<Polynomial>,
}

impl SystemModel {
    pub fn new(state_dim: usize, dist_dim: usize, dynamics: Vec<Polynomial>) -> Result<Self> {
        if dynamics.len() != state_dim {
            return Err(Error::InvalidProblem(format!(
                "expected {state_dim} dynamics components, found {}",
                dynamics.len()
            )));
        }
        for f in &dynamics {
            if f.arity() != state_dim + dist_dim {
                return Err(Error::ArityMismatch {
                    expected: state_dim + dist_dim,
                    found: f.arity(),
                });
            }
        }
        Ok(SystemModel {
            state_dim,
            dist_dim,
            dynamics,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn dist_dim(&self) -> usize {
        self.dist_dim
    }

    pub fn dynamics(&self) -> &[Polynomial] {
        &self.dynamics
    }

    /// The map `x -> f(x, theta)` for a fixed disturbance value.
    pub fn branch(&self, theta: &[f64]) -> Result<Vec<Polynomial>> {
        let n = self.state_dim;
        if theta.len() != self.dist_dim {
            return Err(Error::ArityMismatch {
                expected: self.dist_dim,
                found: theta.len(),
            });
        }
        let mut subst: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
        subst.extend(theta.iter().map(|&t| Polynomial::constant(n, t)));
        self.dynamics.iter().map(|f| f.compose(&subst)).collect()
    }

    pub fn step(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut point = Vec::with_capacity(x.len() + theta.len());
        point.extend_from_slice(x);
        point.extend_from_slice(theta);
        self.dynamics.iter().map(|f| f.eval(&point)).collect()
    }
}

/// How the state space `X` relates to the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `X` is claimed invariant; certified only after the invariance check.
    AssumedInvariant,
    /// Trajectories may leave `X`; conditions range over an over-set `Xhat`.
    Xhat,
}

/// Which event a probability refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    /// Eventually enter `Xr`; leaving `X` does not end the trajectory.
    ReachInvariant,
    /// Enter `Xr` while staying inside `X` up to the hit.
    ReachAvoid,
}

/// A complete, validated verification problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    state_vars: Vec<String>,
    dist_vars: Vec<String>,
    model: SystemModel,
    dist: Disturbance,
    x: RegionSpec,
    x0: RegionSpec,
    xr: RegionSpec,
    xhat: RegionSpec,
    xhat_defaulted: bool,
    mode: Mode,
    /// `f(., theta_j)` for every support point.
    branches: Vec<Vec<Polynomial>>,
}

/// Unvalidated parts of a problem.
#[derive(Clone, Debug)]
pub struct ProblemParts {
    pub state_vars: Vec<String>,
    pub dist_vars: Vec<String>,
    pub model: SystemModel,
    pub dist: Disturbance,
    pub x: RegionSpec,
    pub x0: RegionSpec,
    pub xr: RegionSpec,
    pub xhat: Option<RegionSpec>,
    pub mode: Mode,
}

impl ProblemSpec {
    /// Validate and complete a problem. A missing `Xhat` is replaced by the
    /// bounding box of `X` and the enclosures of its one-step images.
    pub fn new(parts: ProblemParts) -> Result<Self> {
        Self::with_config(parts, &CheckConfig::default())
    }

    pub fn with_config(parts: ProblemParts, config: &CheckConfig) -> Result<Self> {
        let ProblemParts {
            state_vars,
            dist_vars,
            model,
            dist,
            x,
            x0,
            xr,
            xhat,
            mode,
        } = parts;
        let n = model.state_dim();
        let invalid = |m: String| Err(Error::InvalidProblem(m));
        if state_vars.len() != n {
            return invalid(format!("{} state variable names for {n} states", state_vars.len()));
        }
        if dist_vars.len() != model.dist_dim() {
            return invalid(String::from("dist_vars length differs from disturbance dimension"));
        }
        if dist.dim() != model.dist_dim() {
            return invalid(String::from("support point dimension differs from dist_vars"));
        }
        let mut names: Vec<&str> = state_vars.iter().chain(&dist_vars).map(|s| s.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return invalid(String::from("variable names are not distinct"));
        }
        for (name, r) in [("X", &x), ("X0", &x0), ("Xr", &xr)]
            .into_iter()
            .chain(xhat.iter().map(|r| ("Xhat", r)))
        {
            if r.arity != n {
                return invalid(format!("{name} has arity {} but the state has {n} dimensions", r.arity));
            }
            if let Some(b) = r.pieces.iter().find(|b| !b.is_valid() || b.dim() != n) {
                return invalid(format!("{name} has an invalid box {:?}", b.intervals));
            }
        }
        if x.is_empty() {
            return invalid(String::from("X is empty"));
        }
        if !x.covers(&x0) {
            return invalid(String::from("X0 not contained in X"));
        }
        if !x.covers(&xr) {
            return invalid(String::from("Xr not contained in X"));
        }
        let branches: Vec<Vec<Polynomial>> = dist
            .support()
            .iter()
            .map(|t| model.branch(t))
            .collect::<Result<_>>()?;

        let (xhat, xhat_defaulted) = match xhat {
            Some(h) => {
                if !h.covers(&x) {
                    return invalid(String::from("X not contained in Xhat"));
                }
                let images = images_within(&branches, &x, &h, config);
                if !images.is_proved() {
                    return invalid(String::from(
                        "Xhat does not provably contain the one-step image of X",
                    ));
                }
                (h, false)
            }
            None => (default_xhat(&branches, &x), true),
        };

        Ok(ProblemSpec {
            state_vars,
            dist_vars,
            model,
            dist,
            x,
            x0,
            xr,
            xhat,
            xhat_defaulted,
            mode,
            branches,
        })
    }

    pub fn state_vars(&self) -> &[String] {
        &self.state_vars
    }

    pub fn dist_vars(&self) -> &[String] {
        &self.dist_vars
    }

    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn dist(&self) -> &Disturbance {
        &self.dist
    }

    pub fn x(&self) -> &RegionSpec {
        &self.x
    }

    pub fn x0(&self) -> &RegionSpec {
        &self.x0
    }

    pub fn xr(&self) -> &RegionSpec {
        &self.xr
    }

    pub fn xhat(&self) -> &RegionSpec {
        &self.xhat
    }

    /// Whether `xhat` was computed rather than supplied.
    pub fn xhat_defaulted(&self) -> bool {
        self.xhat_defaulted
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn branches(&self) -> &[Vec<Polynomial>] {
        &self.branches
    }

    /// Variable names as string slices, for printing polynomials over `x`.
    pub fn state_var_refs(&self) -> Vec<&str> {
        self.state_vars.iter().map(|s| s.as_str()).collect()
    }

    pub fn step(&self, x: &[f64], branch: usize) -> Vec<f64> {
        self.model.step(x, &self.dist.support()[branch])
    }
}

/// Enclosure of the image of a box under one branch.
pub(crate) fn image_box(branch: &[Polynomial], b: &Hyperbox) -> Hyperbox {
    Hyperbox::new(
        branch
            .iter()
            .map(|f| {
                let e = enclose_range(f, &b.intervals);
                Interval::new(e.lo, e.hi)
            })
            .collect(),
    )
}

/// Rigorous enclosure of the image of a single point under one branch.
pub(crate) fn image_point_box(branch: &[Polynomial], x: &[f64]) -> Hyperbox {
    Hyperbox::new(branch.iter().map(|f| f.eval_enclosure(x)).collect())
}

/// Prove that every branch maps every point of `domain` into `target`.
fn images_within(
    branches: &[Vec<Polynomial>],
    domain: &RegionSpec,
    target: &RegionSpec,
    config: &CheckConfig,
) -> CheckOutcome {
    branch_and_bound(domain, config, |b| {
        let mut all_inside = true;
        for (j, branch) in branches.iter().enumerate() {
            if target.covers_box(&image_box(branch, b)) {
                continue;
            }
            all_inside = false;
            for pt in probe_points(b) {
                if !target.intersects_box(&image_point_box(branch, &pt)) {
                    return Err(Witness {
                        point: pt,
                        value: None,
                        disturbance: Some(j),
                    });
                }
            }
        }
        Ok(all_inside)
    })
}

/// Decide whether `X` is invariant: `f(x, theta_j)` in `X` for all `x` in `X`
/// and every support point. A refutation names `x` and the support index.
pub fn check_assumption1(spec: &ProblemSpec, config: &CheckConfig) -> CheckOutcome {
    images_within(&spec.branches, &spec.x, &spec.x, config)
}

fn default_xhat(branches: &[Vec<Polynomial>], x: &RegionSpec) -> RegionSpec {
    let mut hull = x.bounding_box().expect("X is non-empty");
    for branch in branches {
        for piece in &x.pieces {
            let img = image_box(branch, piece);
            for (h, i) in hull.intervals.iter_mut().zip(&img.intervals) {
                *h = h.hull(i);
            }
        }
    }
    RegionSpec::from_box(hull)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use crate::regioncheck::Status;
    use alloc::string::ToString;
    use alloc::vec;

    fn one_d(
        f: &str,
        support: Vec<f64>,
        x: (f64, f64),
        x0: (f64, f64),
        xr: &[(f64, f64)],
        xhat: Option<(f64, f64)>,
    ) -> Result<ProblemSpec> {
        let n = support.len();
        let dist = Disturbance::new(support.into_iter().map(|t| vec![t]).collect(), vec![1.0 / n as f64; n])?;
        let model = SystemModel::new(1, 1, vec![parse_poly(f, &["x", "t"])?])?;
        let region = |bs: &[(f64, f64)]| RegionSpec {
            arity: 1,
            pieces: bs.iter().map(|b| Hyperbox::from_bounds(&[*b])).collect(),
        };
        ProblemSpec::new(ProblemParts {
            state_vars: vec!["x".to_string()],
            dist_vars: vec!["t".to_string()],
            model,
            dist,
            x: region(&[x]),
            x0: region(&[x0]),
            xr: region(xr),
            xhat: xhat.map(|h| region(&[h])),
            mode: if xhat.is_some() { Mode::Xhat } else { Mode::AssumedInvariant },
        })
    }

    #[test]
    fn unnormalized_distribution_is_rejected() {
        let err = Disturbance::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]).unwrap_err();
        assert_eq!(err.to_string(), "distribution not normalized");
    }

    #[test]
    fn initial_set_outside_state_space_is_rejected() {
        let err = one_d("0.5*x + t", vec![-0.05, 0.05], (-1.0, 1.0), (2.0, 3.0), &[], None).unwrap_err();
        assert_eq!(err.to_string(), "X0 not contained in X");
    }

    #[test]
    fn contracting_system_is_invariant() {
        let spec = one_d("0.5*x + t", vec![-0.05, 0.05], (-1.0, 1.0), (-0.1, 0.1), &[(-1.0, -0.9), (0.9, 1.0)], None)
            .unwrap();
        assert_eq!(check_assumption1(&spec, &CheckConfig::default()).status, Status::Proved);
    }

    #[test]
    fn random_walk_leaves_state_space() {
        let spec = one_d("x + t", vec![-1.0, 1.0], (0.0, 10.0), (5.0, 5.0), &[(9.0, 10.0)], Some((-1.0, 11.0))).unwrap();
        let out = check_assumption1(&spec, &CheckConfig::default());
        assert_eq!(out.status, Status::Disproved);
        let w = out.witness.unwrap();
        let image = spec.step(&w.point, w.disturbance.unwrap());
        assert!(!spec.x().contains_point(&image));
    }

    #[test]
    fn identity_dynamics_are_invariant() {
        let spec = one_d("x", vec![0.0], (0.0, 1.0), (0.0, 0.5), &[], None).unwrap();
        assert_eq!(check_assumption1(&spec, &CheckConfig::default()).status, Status::Proved);
    }

    #[test]
    fn default_xhat_covers_images() {
        let spec = one_d("x + t", vec![-1.0, 1.0], (0.0, 10.0), (5.0, 5.0), &[(9.0, 10.0)], None).unwrap();
        assert!(spec.xhat_defaulted());
        assert_eq!(spec.xhat().pieces, vec![Hyperbox::from_bounds(&[(-1.0, 11.0)])]);
    }

    #[test]
    fn too_small_xhat_is_rejected() {
        let err = one_d("x + t", vec![-1.0, 1.0], (0.0, 10.0), (5.0, 5.0), &[(9.0, 10.0)], Some((-0.5, 10.5)))
            .unwrap_err();
        assert!(err.to_string().contains("one-step image"));
    }
}
