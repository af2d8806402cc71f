//! Trajectory simulation and the exact absorption-probability oracle for
//! chains that live on a lattice.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::round;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::model::{ProblemSpec, Semantics};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Entered `Xr` at this step.
    Hit(usize),
    /// Left `X` at this step before hitting (reach-avoid only).
    Exit(usize),
    /// Neither within the horizon.
    Censored,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub horizon: usize,
    pub trials: u64,
    pub semantics: Semantics,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub hits: u64,
    pub exits: u64,
    pub censored: u64,
}

impl TrialCounts {
    pub fn record(&mut self, o: Outcome) {
        match o {
            Outcome::Hit(_) => self.hits += 1,
            Outcome::Exit(_) => self.exits += 1,
            Outcome::Censored => self.censored += 1,
        }
    }

    pub fn merge(&self, other: &TrialCounts) -> TrialCounts {
        TrialCounts {
            hits: self.hits + other.hits,
            exits: self.exits + other.exits,
            censored: self.censored + other.censored,
        }
    }

    pub fn total(&self) -> u64 {
        self.hits + self.exits + self.censored
    }
}

/// The random stream of one trial: ChaCha8 keyed by `seed`, stream `trial`.
/// Step `l` consumes the `l`-th 64-bit word, so trials are independent of
/// scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Run one trajectory from `x0` for at most `horizon` steps.
pub fn simulate_reach(
    spec: &ProblemSpec,
    x0: &[f64],
    seed: u64,
    trial: u64,
    horizon: usize,
    semantics: Semantics,
) -> Result<Outcome> {
    if x0.len() != spec.state_dim() {
        return Err(Error::ArityMismatch {
            expected: spec.state_dim(),
            found: x0.len(),
        });
    }
    if !spec.x().contains_point(x0) {
        return Err(Error::StartOutside(x0.to_vec()));
    }
    let mut rng = trial_rng(seed, trial);
    let mut x = x0.to_vec();
    for step in 0..=horizon {
        if spec.xr().contains_point(&x) {
            return Ok(Outcome::Hit(step));
        }
        if semantics == Semantics::ReachAvoid && !spec.x().contains_point(&x) {
            return Ok(Outcome::Exit(step));
        }
        if step == horizon {
            break;
        }
        let j = spec.dist().index_for(uniform(&mut rng));
        x = spec.step(&x, j);
    }
    Ok(Outcome::Censored)
}

/// Outcome counts of trials `range` from `x0`.
pub fn run_trials(
    spec: &ProblemSpec,
    x0: &[f64],
    config: &TrialConfig,
    range: core::ops::Range<u64>,
) -> Result<TrialCounts> {
    let mut counts = TrialCounts::default();
    for trial in range {
        counts.record(simulate_reach(spec, x0, config.seed, trial, config.horizon, config.semantics)?);
    }
    Ok(counts)
}

/// Regular grid `origin + step * z`, `z` integer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
}

/// Relative tolerance for recognising a lattice point.
const LATTICE_TOL: f64 = 1e-9;

/// States beyond this count abort the exploration.
pub const MAX_CHAIN_STATES: usize = 200_000;

/// Dense LU is used up to this many unknowns; value iteration beyond.
const DENSE_LIMIT: usize = 1500;

impl Lattice {
    fn index(&self, x: &[f64]) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(x.len());
        for ((xi, o), h) in x.iter().zip(&self.origin).zip(&self.step) {
            let z = round((xi - o) / h);
            let back = o + z * h;
            if (back - xi).abs() > LATTICE_TOL * (1.0 + xi.abs()) {
                return None;
            }
            out.push(z as i64);
        }
        Some(out)
    }

    fn point(&self, z: &[i64]) -> Vec<f64> {
        z.iter()
            .zip(&self.origin)
            .zip(&self.step)
            .map(|((zi, o), h)| o + *zi as f64 * h)
            .collect()
    }
}

/// Absorption probabilities of every explored lattice state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSolution {
    pub states: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    /// `true` if the linear system was solved directly.
    pub direct: bool,
}

impl ChainSolution {
    /// Probability at the state nearest to `x`, if `x` is one of them.
    pub fn at(&self, x: &[f64]) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s.iter().zip(x).all(|(a, b)| (a - b).abs() <= LATTICE_TOL * (1.0 + b.abs())))
            .map(|i| self.probs[i])
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Target,
    Exit,
    Transient,
}

/// Solve `p(x) = sum_j p_j p(f(x, theta_j))` with `p = 1` on `Xr` and, under
/// reach-avoid semantics, `p = 0` outside `X`, over all lattice states
/// reachable from the lattice points of `X`.
pub fn exact_chain_probability(spec: &ProblemSpec, lattice: &Lattice, semantics: Semantics) -> Result<ChainSolution> {
    let n = spec.state_dim();
    if lattice.origin.len() != n || lattice.step.len() != n {
        return Err(Error::Lattice(format!("lattice must have {n} coordinates")));
    }
    if lattice.step.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Lattice(String::from("lattice steps must be positive")));
    }
    let bbox = spec.x().bounding_box().ok_or(Error::EmptyRegion)?;

    // Seed states: lattice points of X.
    let mut ids: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut states: Vec<Vec<i64>> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let intern = |z: Vec<i64>, ids: &mut BTreeMap<Vec<i64>, usize>, states: &mut Vec<Vec<i64>>, queue: &mut VecDeque<usize>| -> Result<usize> {
        if let Some(&i) = ids.get(&z) {
            return Ok(i);
        }
        if states.len() >= MAX_CHAIN_STATES {
            return Err(Error::Lattice(format!("more than {MAX_CHAIN_STATES} reachable states")));
        }
        let i = states.len();
        ids.insert(z.clone(), i);
        states.push(z);
        queue.push_back(i);
        Ok(i)
    };
    let lo: Vec<i64> = (0..n)
        .map(|i| libm::ceil((bbox.lo(i) - lattice.origin[i]) / lattice.step[i] - LATTICE_TOL) as i64)
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|i| libm::floor((bbox.hi(i) - lattice.origin[i]) / lattice.step[i] + LATTICE_TOL) as i64)
        .collect();
    let count = lo
        .iter()
        .zip(&hi)
        .try_fold(1usize, |acc, (l, h)| acc.checked_mul((h - l + 1).max(0) as usize))
        .unwrap_or(usize::MAX);
    if count > MAX_CHAIN_STATES {
        return Err(Error::Lattice(format!("{count} lattice points in X")));
    }
    if count > 0 {
        let mut z = lo.clone();
        'grid: loop {
            let x = lattice.point(&z);
            if spec.x().contains_point_tol(&x, LATTICE_TOL) {
                intern(z.clone(), &mut ids, &mut states, &mut queue)?;
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break 'grid;
                }
                i -= 1;
                z[i] += 1;
                if z[i] <= hi[i] {
                    break;
                }
                z[i] = lo[i];
            }
        }
    }
    if states.is_empty() {
        return Err(Error::Lattice(String::from("no lattice point lies in X")));
    }

    let classify = |x: &[f64]| {
        if spec.xr().contains_point_tol(x, LATTICE_TOL) {
            Kind::Target
        } else if semantics == Semantics::ReachAvoid && !spec.x().contains_point_tol(x, LATTICE_TOL) {
            Kind::Exit
        } else {
            Kind::Transient
        }
    };

    let mut kinds: Vec<Kind> = Vec::new();
    let mut succ: Vec<Vec<(usize, f64)>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let x = lattice.point(&states[i]);
        let kind = classify(&x);
        let mut edges = Vec::new();
        if kind == Kind::Transient {
            for (j, p) in spec.dist().probs().iter().enumerate() {
                let y = spec.step(&x, j);
                let z = lattice
                    .index(&y)
                    .ok_or_else(|| Error::Lattice(format!("f({x:?}, theta_{j}) = {y:?} is not a lattice point")))?;
                let k = intern(z, &mut ids, &mut states, &mut queue)?;
                edges.push((k, *p));
            }
        }
        if kinds.len() <= i {
            kinds.resize(i + 1, Kind::Transient);
            succ.resize(i + 1, Vec::new());
        }
        kinds[i] = kind;
        succ[i] = edges;
    }

    // States that can reach the target; the rest have probability zero and
    // would make the system singular.
    let total = states.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (i, edges) in succ.iter().enumerate() {
        for &(k, _) in edges {
            pred[k].push(i);
        }
    }
    let mut can_reach = vec![false; total];
    let mut stack: Vec<usize> = (0..total).filter(|&i| kinds[i] == Kind::Target).collect();
    for &i in &stack {
        can_reach[i] = true;
    }
    while let Some(i) = stack.pop() {
        for &q in &pred[i] {
            if !can_reach[q] && kinds[q] == Kind::Transient {
                can_reach[q] = true;
                stack.push(q);
            }
        }
    }

    let unknowns: Vec<usize> = (0..total)
        .filter(|&i| kinds[i] == Kind::Transient && can_reach[i])
        .collect();
    let mut slot = vec![usize::MAX; total];
    for (u, &i) in unknowns.iter().enumerate() {
        slot[i] = u;
    }
    let mut probs: Vec<f64> = (0..total)
        .map(|i| if kinds[i] == Kind::Target { 1.0 } else { 0.0 })
        .collect();
    let m = unknowns.len();
    let mut direct = false;
    if m > 0 {
        let rhs = |i: usize| -> f64 {
            succ[i]
                .iter()
                .filter(|(k, _)| kinds[*k] == Kind::Target)
                .map(|(_, p)| p)
                .sum()
        };
        let mut solved = None;
        if m <= DENSE_LIMIT {
            let mut a = DMatrix::<f64>::identity(m, m);
            let mut b = DVector::<f64>::zeros(m);
            for (u, &i) in unknowns.iter().enumerate() {
                b[u] = rhs(i);
                for &(k, p) in &succ[i] {
                    if slot[k] != usize::MAX {
                        a[(u, slot[k])] -= p;
                    }
                }
            }
            solved = a.lu().solve(&b);
        }
        match solved {
            Some(x) => {
                direct = true;
                for (u, &i) in unknowns.iter().enumerate() {
                    probs[i] = x[u].clamp(0.0, 1.0);
                }
            }
            None => value_iteration(&unknowns, &succ, &mut probs),
        }
    }
    Ok(ChainSolution {
        states: states.iter().map(|z| lattice.point(z)).collect(),
        probs,
        direct,
    })
}

/// Gauss-Seidel sweeps from below until the largest change is under 1e-12.
fn value_iteration(unknowns: &[usize], succ: &[Vec<(usize, f64)>], probs: &mut [f64]) {
    const SWEEPS: usize = 1_000_000;
    for _ in 0..SWEEPS {
        let mut change = 0.0f64;
        for &i in unknowns {
            let v: f64 = succ[i].iter().map(|&(k, p)| p * probs[k]).sum();
            change = change.max((v - probs[i]).abs());
            probs[i] = v;
        }
        if change < 1e-12 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Hyperbox, RegionSpec};
    use crate::model::{Disturbance, Mode, ProblemParts, SystemModel};
    use crate::poly::parse_poly;
    use alloc::string::ToString;

    fn walk(p_up: f64, xhat: bool) -> ProblemSpec {
        let model = SystemModel::new(1, 1, vec![parse_poly("x + t", &["x", "t"]).unwrap()]).unwrap();
        let dist = Disturbance::new(vec![vec![1.0], vec![-1.0]], vec![p_up, 1.0 - p_up]).unwrap();
        let r = |lo, hi| RegionSpec::from_box(Hyperbox::from_bounds(&[(lo, hi)]));
        ProblemSpec::new(ProblemParts {
            state_vars: vec!["x".to_string()],
            dist_vars: vec!["t".to_string()],
            model,
            dist,
            x: r(0.0, 10.0),
            x0: r(5.0, 5.0),
            xr: r(9.0, 10.0),
            xhat: if xhat { Some(r(-1.0, 11.0)) } else { None },
            mode: Mode::Xhat,
        })
        .unwrap()
    }

    fn lattice() -> Lattice {
        Lattice {
            origin: vec![0.0],
            step: vec![1.0],
        }
    }

    #[test]
    fn gamblers_ruin() {
        let sol = exact_chain_probability(&walk(0.5, true), &lattice(), Semantics::ReachAvoid).unwrap();
        assert!(sol.direct);
        assert!((sol.at(&[5.0]).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(sol.at(&[9.0]), Some(1.0));
        assert_eq!(sol.at(&[-1.0]), Some(0.0));
    }

    #[test]
    fn biased_walk_matches_closed_form() {
        let sol = exact_chain_probability(&walk(0.6, false), &lattice(), Semantics::ReachAvoid).unwrap();
        let r: f64 = 0.4 / 0.6;
        let closed = (1.0 - r.powi(6)) / (1.0 - r.powi(10));
        assert!((sol.at(&[5.0]).unwrap() - closed).abs() < 1e-10);
    }

    #[test]
    fn non_lattice_dynamics_are_rejected() {
        let l = Lattice {
            origin: vec![0.0],
            step: vec![0.7],
        };
        assert!(matches!(
            exact_chain_probability(&walk(0.5, true), &l, Semantics::ReachAvoid),
            Err(Error::Lattice(_))
        ));
    }

    #[test]
    fn start_in_target_hits_immediately() {
        let spec = walk(0.5, true);
        assert_eq!(
            simulate_reach(&spec, &[9.5], 1, 0, 10, Semantics::ReachAvoid).unwrap(),
            Outcome::Hit(0)
        );
        assert_eq!(
            simulate_reach(&spec, &[11.0], 1, 0, 10, Semantics::ReachAvoid),
            Err(Error::StartOutside(vec![11.0]))
        );
    }

    #[test]
    fn trials_are_reproducible() {
        let spec = walk(0.5, true);
        let a: Vec<Outcome> = (0..50)
            .map(|t| simulate_reach(&spec, &[5.0], 42, t, 500, Semantics::ReachAvoid).unwrap())
            .collect();
        let b: Vec<Outcome> = (0..50)
            .rev()
            .map(|t| simulate_reach(&spec, &[5.0], 42, t, 500, Semantics::ReachAvoid).unwrap())
            .collect();
        assert!(a.iter().eq(b.iter().rev()));
    }

    #[test]
    fn avoid_never_exceeds_invariant() {
        let spec = walk(0.5, true);
        let cfg = |s| TrialConfig {
            seed: 7,
            horizon: 200,
            trials: 400,
            semantics: s,
        };
        let ra = run_trials(&spec, &[5.0], &cfg(Semantics::ReachAvoid), 0..400).unwrap();
        let ri = run_trials(&spec, &[5.0], &cfg(Semantics::ReachInvariant), 0..400).unwrap();
        assert!(ra.hits <= ri.hits);
        assert_eq!(ra.total(), 400);
    }
}
