//! Expectation operators over finite-support disturbances.
//!
//! `(T v)(x) = sum_j p_j v(f(x, theta_j))` is computed exactly as a polynomial
//! identity; `T^k` iterates it. The stopped-process check handles trajectories
//! that freeze on entering the target set, which is not polynomial in `x`.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{region_difference, Hyperbox, RegionSpec};
use crate::interval::Interval;
use crate::model::{image_box, ProblemSpec};
use crate::poly::{enclose_range, Polynomial};
use crate::regioncheck::{branch_and_bound, probe_points, CheckConfig, CheckOutcome, Status, Witness};
use crate::{Error, Result};

/// Default cap on the total degree of `T^k v` and of composed path maps.
pub const DEFAULT_DEGREE_CAP: u32 = 64;

/// `v -> E[v(f(x, theta))]` for one problem.
#[derive(Clone, Copy, Debug)]
pub struct ExpectationOperator<'a> {
    branches: &'a [Vec<Polynomial>],
    probs: &'a [f64],
    state_dim: usize,
    degree_cap: u32,
}

impl<'a> ExpectationOperator<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Self {
        ExpectationOperator {
            branches: spec.branches(),
            probs: spec.dist().probs(),
            state_dim: spec.state_dim(),
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }

    pub fn with_degree_cap(mut self, cap: u32) -> Self {
        self.degree_cap = cap;
        self
    }

    fn dynamics_degree(&self) -> u32 {
        self.branches
            .iter()
            .flatten()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
            .max(1)
    }

    fn check_arity(&self, v: &Polynomial) -> Result<()> {
        if v.arity() != self.state_dim {
            return Err(Error::ArityMismatch {
                expected: self.state_dim,
                found: v.arity(),
            });
        }
        Ok(())
    }

    /// One-step post-expectation.
    pub fn apply(&self, v: &Polynomial) -> Result<Polynomial> {
        self.check_arity(v)?;
        let predicted = v.degree().saturating_mul(self.dynamics_degree());
        if predicted > self.degree_cap {
            return Err(Error::DegreeCap {
                degree: predicted,
                cap: self.degree_cap,
            });
        }
        let mut out = Polynomial::zero(self.state_dim);
        for (branch, p) in self.branches.iter().zip(self.probs) {
            out = &out + &v.compose(branch)?.scale(*p);
        }
        Ok(out)
    }

    /// `T^k v` for `k >= 1`.
    pub fn apply_k(&self, v: &Polynomial, k: usize) -> Result<Polynomial> {
        self.check_arity(v)?;
        if k == 0 {
            return Err(Error::ParameterRange {
                name: "k",
                value: 0.0,
            });
        }
        let mut acc = v.clone();
        for _ in 0..k {
            acc = self.apply(&acc)?;
        }
        Ok(acc)
    }
}

/// `T v` for the problem's dynamics and disturbance.
pub fn post_expectation(spec: &ProblemSpec, v: &Polynomial) -> Result<Polynomial> {
    ExpectationOperator::new(spec).apply(v)
}

/// `T^k v`: the expectation over the `k`-fold composition with product measure.
pub fn k_post_expectation(spec: &ProblemSpec, v: &Polynomial, k: usize) -> Result<Polynomial> {
    ExpectationOperator::new(spec).apply_k(v, k)
}

/// A disturbance-sequence prefix of the stopped process.
struct PathNode {
    /// State after the prefix, as a polynomial map of the start state.
    map: Vec<Polynomial>,
    prob: f64,
    /// `v` composed with `map`.
    value: Polynomial,
    steps: usize,
    children: core::ops::Range<usize>,
}

enum Class {
    Target,
    Free,
    Mixed,
}

fn classify(spec: &ProblemSpec, y: &Hyperbox) -> Class {
    if spec.xr().covers_box(y) {
        Class::Target
    } else if !spec.xr().intersects_box(y) {
        Class::Free
    } else {
        Class::Mixed
    }
}

struct StoppedTree<'a> {
    spec: &'a ProblemSpec,
    v: &'a Polynomial,
    k: usize,
    nodes: Vec<PathNode>,
    roots: core::ops::Range<usize>,
}

impl<'a> StoppedTree<'a> {
    fn build(spec: &'a ProblemSpec, v: &'a Polynomial, k: usize, degree_cap: u32) -> Result<Self> {
        let n = spec.state_dim();
        let identity: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
        let mut nodes: Vec<PathNode> = Vec::new();
        let mut frontier = vec![(identity, 1.0f64, usize::MAX)];
        let mut roots = 0..0;
        for step in 1..=k {
            let mut next = Vec::new();
            let first = nodes.len();
            for (map, prob, parent) in frontier {
                let start = nodes.len();
                for (branch, p) in spec.branches().iter().zip(spec.dist().probs()) {
                    let child_map: Vec<Polynomial> =
                        branch.iter().map(|f| f.compose(&map)).collect::<Result<_>>()?;
                    let value = v.compose(&child_map)?;
                    if value.degree() > degree_cap {
                        return Err(Error::DegreeCap {
                            degree: value.degree(),
                            cap: degree_cap,
                        });
                    }
                    nodes.push(PathNode {
                        map: child_map.clone(),
                        prob: prob * p,
                        value,
                        steps: step,
                        children: 0..0,
                    });
                    if step < k {
                        next.push((child_map, prob * p, nodes.len() - 1));
                    }
                }
                if parent != usize::MAX {
                    nodes[parent].children = start..nodes.len();
                }
            }
            if step == 1 {
                roots = first..nodes.len();
            }
            frontier = next;
        }
        Ok(StoppedTree {
            spec,
            v,
            k,
            nodes,
            roots,
        })
    }

    /// Upper bound of `E[v(stopped state after r more steps)]` from any point of `y`.
    fn upper_from_box(&self, y: &Hyperbox, r: usize) -> f64 {
        let stop = enclose_range(self.v, &y.intervals).hi;
        if r == 0 {
            return stop;
        }
        let go = || {
            let mut acc = Interval::ZERO;
            for (branch, p) in self.spec.branches().iter().zip(self.spec.dist().probs()) {
                let img = image_box(branch, y);
                acc = acc + Interval::point(self.upper_from_box(&img, r - 1)).scale(*p);
            }
            acc.hi
        };
        match classify(self.spec, y) {
            Class::Target => stop,
            Class::Free => go(),
            Class::Mixed => stop.max(go()),
        }
    }

    /// Lower bound of `v(x) - E[v(stopped state after k steps)]` over `b`,
    /// assuming the first step is taken from every point of `b`.
    fn lower_bound(&self, b: &Hyperbox) -> f64 {
        let mut determined = Polynomial::zero(self.spec.state_dim());
        let mut undetermined = Interval::ZERO;
        let mut stack: Vec<usize> = self.roots.clone().rev().collect();
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.steps == self.k {
                determined = &determined + &node.value.scale(node.prob);
                continue;
            }
            let y = image_box(&node.map, b);
            match classify(self.spec, &y) {
                Class::Target => determined = &determined + &node.value.scale(node.prob),
                Class::Free => stack.extend(node.children.clone().rev()),
                Class::Mixed => {
                    let ub = self.upper_from_box(&y, self.k - node.steps);
                    undetermined = undetermined + Interval::point(ub).scale(node.prob);
                }
            }
        }
        let g = self.v - &determined;
        let lo = enclose_range(&g, &b.intervals).lo;
        (Interval::point(lo) - Interval::point(undetermined.hi)).lo
    }

    /// Rigorous enclosure of `E[v(stopped state after r steps)]` from the
    /// point box `y`, or `None` when a membership test is ambiguous.
    fn point_expectation(&self, y: &Hyperbox, r: usize, first: bool) -> Option<Interval> {
        if r == 0 {
            return Some(self.v.eval_interval(&y.intervals));
        }
        if !first {
            match classify(self.spec, y) {
                Class::Target => return Some(self.v.eval_interval(&y.intervals)),
                Class::Free => {}
                Class::Mixed => return None,
            }
        }
        let mut acc = Interval::ZERO;
        for (branch, p) in self.spec.branches().iter().zip(self.spec.dist().probs()) {
            let img = Hyperbox::new(branch.iter().map(|f| f.eval_interval(&y.intervals)).collect());
            acc = acc + self.point_expectation(&img, r - 1, false)?.scale(*p);
        }
        Some(acc)
    }
}

/// Prove `v(x) - E[v(x~(k))] >= margin` on `region`, where `x~` is the
/// process that freezes once it enters `Xr`.
///
/// Points of `region` inside `Xr` are frozen from the start, so the
/// obligation there is `0 >= margin`. Elsewhere every disturbance path is
/// followed symbolically while its image provably avoids `Xr`, frozen once
/// it provably lies in `Xr`, and bounded by interval recursion otherwise.
pub fn stopped_expectation_check(
    spec: &ProblemSpec,
    v: &Polynomial,
    k: usize,
    region: &RegionSpec,
    margin: f64,
    config: &CheckConfig,
) -> Result<CheckOutcome> {
    if k == 0 {
        return Err(Error::ParameterRange {
            name: "k",
            value: 0.0,
        });
    }
    if v.arity() != spec.state_dim() {
        return Err(Error::ArityMismatch {
            expected: spec.state_dim(),
            found: v.arity(),
        });
    }
    let threshold = margin - config.tolerance;
    let inside: Vec<Hyperbox> = region
        .pieces
        .iter()
        .flat_map(|r| spec.xr().pieces.iter().filter_map(move |q| r.intersect(q)))
        .collect();
    if threshold > 0.0 {
        if let Some(b) = inside.first() {
            return Ok(CheckOutcome {
                status: Status::Disproved,
                witness: Some(Witness {
                    point: b.center(),
                    value: Some(0.0),
                    disturbance: None,
                }),
                frontier: Vec::new(),
                boxes_examined: 1,
                max_depth: 0,
            });
        }
    }
    // With a non-positive threshold the frozen points hold trivially, and the
    // closed cover of the remainder may treat its boundary points in `Xr` as
    // advancing: the claim proved there is not needed.
    let outside = if threshold <= 0.0 {
        region_difference(region, spec.xr())
    } else {
        region.clone()
    };
    let tree = StoppedTree::build(spec, v, k, DEFAULT_DEGREE_CAP)?;
    Ok(branch_and_bound(&outside, config, |b| {
        if tree.lower_bound(b) >= threshold {
            return Ok(true);
        }
        for pt in probe_points(b) {
            if spec.xr().contains_point(&pt) {
                continue;
            }
            let y = Hyperbox::point(&pt);
            if let Some(e) = tree.point_expectation(&y, k, true) {
                let g = v.eval_enclosure(&pt) - e;
                if g.hi < threshold {
                    return Err(Witness {
                        value: Some(g.lo + (g.hi - g.lo) * 0.5),
                        point: pt,
                        disturbance: None,
                    });
                }
            }
        }
        Ok(false)
    }))
}

/// End states of the `k`-step stopped process from the point `x`, with path
/// probabilities. A path that enters `Xr` after at least one step freezes
/// there; a start inside `Xr` is frozen from the outset.
pub fn stopped_endpoints(spec: &ProblemSpec, x: &[f64], k: usize) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    if spec.xr().contains_point(x) {
        out.push((1.0, x.to_vec()));
        return out;
    }
    let mut stack = vec![(x.to_vec(), 1.0f64, 0usize)];
    while let Some((y, p, steps)) = stack.pop() {
        if steps == k || (steps > 0 && spec.xr().contains_point(&y)) {
            out.push((p, y));
            continue;
        }
        for (j, q) in spec.dist().probs().iter().enumerate().rev() {
            stack.push((spec.step(&y, j), p * q, steps + 1));
        }
    }
    out
}
