//! Dense linear programming.
//!
//! `max c.y  s.t.  A y <= b,  l <= y <= u` is solved through its dual
//! `min b'.p  s.t.  A'^T p >= c,  p >= 0` by a two-phase revised simplex
//! with Bland's rule. The dual has one equality row per primal variable, so
//! the basis stays small however many sample rows there are. The primal
//! solution is read off as the simplex multipliers.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pivots allowed per phase before giving up.
pub const MAX_PIVOTS: usize = 50_000;
/// Largest accepted violation of a normalized row by an optimal solution.
pub const RESIDUAL_TOL: f64 = 1e-8;

const PRICE_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 32;

/// `coeffs . y <= rhs`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Maximize `objective . y` subject to `rows` and `lower <= y <= upper`.
/// Bounds may be infinite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpOutcome {
    Optimal { values: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted or numerical trouble.
    Stalled,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of a row or bound by `y`, rows scaled to unit
    /// max-norm.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let scale = row.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let lhs: f64 = row.coeffs.iter().zip(y).map(|(a, x)| a * x).sum();
            let r = lhs - row.rhs;
            worst = worst.max(if scale > 0.0 { r / scale } else { r });
        }
        for ((x, l), u) in y.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(l - x).max(x - u);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |m: &str| Err(Error::Template(String::from(m)));
        if self.lower.len() != n || self.upper.len() != n || self.rows.iter().any(|r| r.coeffs.len() != n) {
            return bad("LP dimensions disagree");
        }
        if self.objective.iter().any(|c| !c.is_finite())
            || self.rows.iter().any(|r| !r.rhs.is_finite() || r.coeffs.iter().any(|a| !a.is_finite()))
        {
            return bad("LP data must be finite");
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return bad("LP bounds must be ordered");
        }
        Ok(())
    }
}

/// The dual in equality form `M z = c, z >= 0`, `M = [A'^T | -I]`.
struct Dual {
    n: usize,
    /// Rows of `A'` (shifted, normalized primal rows), each a column of `M`.
    rows: Vec<Vec<f64>>,
    /// Right-hand sides of `A'`, the dual costs.
    rhs: Vec<f64>,
    /// Sign applied to each equality row so that its right-hand side is >= 0.
    sign: Vec<f64>,
    target: Vec<f64>,
}

impl Dual {
    fn num_structural(&self) -> usize {
        self.rows.len() + self.n
    }

    fn num_cols(&self) -> usize {
        self.num_structural() + self.n
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.num_structural()
    }

    /// Entry `i` of the sign-normalized column `j`.
    fn entry(&self, i: usize, j: usize) -> f64 {
        let m = self.rows.len();
        let raw = if j < m {
            self.rows[j][i]
        } else if j < m + self.n {
            if j - m == i {
                -1.0
            } else {
                0.0
            }
        } else {
            // Artificials are already in normalized form.
            return if j - m - self.n == i { 1.0 } else { 0.0 };
        };
        raw * self.sign[i]
    }

    /// `sum_i y_i * column_j[i]`
    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        let m = self.rows.len();
        if j < m {
            self.rows[j].iter().zip(y).zip(&self.sign).map(|((a, yi), s)| a * yi * s).sum()
        } else if j < m + self.n {
            -y[j - m] * self.sign[j - m]
        } else {
            y[j - m - self.n]
        }
    }

    fn cost(&self, j: usize, phase_one: bool) -> f64 {
        if phase_one {
            if self.is_artificial(j) {
                1.0
            } else {
                0.0
            }
        } else if j < self.rows.len() {
            self.rhs[j]
        } else {
            0.0
        }
    }
}

struct Tableau {
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Row-major inverse of the basis matrix.
    inverse: Vec<f64>,
    values: Vec<f64>,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
    Stalled,
}

impl Tableau {
    /// Start from the slack of every row whose right-hand side is `<= 0`
    /// (its normalized column is then `+e_i` or, at a zero right-hand side,
    /// the degenerate `-e_i`) and an artificial elsewhere.
    fn new(dual: &Dual) -> Self {
        let n = dual.n;
        let m = dual.rows.len();
        let mut inverse = vec![0.0; n * n];
        let mut basis = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let rhs = dual.target[i] * dual.sign[i];
            if dual.target[i] <= 0.0 {
                let diag = dual.entry(i, m + i);
                inverse[i * n + i] = 1.0 / diag;
                basis.push(m + i);
                values.push(rhs / diag);
            } else {
                inverse[i * n + i] = 1.0;
                basis.push(dual.num_structural() + i);
                values.push(rhs);
            }
        }
        let mut in_basis = vec![false; dual.num_cols()];
        for &j in &basis {
            in_basis[j] = true;
        }
        Tableau {
            basis,
            in_basis,
            inverse,
            values,
            pivots: 0,
        }
    }

    fn has_artificials(&self, dual: &Dual) -> bool {
        self.basis.iter().any(|&j| dual.is_artificial(j))
    }

    fn multipliers(&self, dual: &Dual, phase_one: bool) -> Vec<f64> {
        let n = dual.n;
        let mut y = vec![0.0; n];
        for (k, &j) in self.basis.iter().enumerate() {
            let c = dual.cost(j, phase_one);
            if c != 0.0 {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += c * self.inverse[k * n + i];
                }
            }
        }
        y
    }

    fn direction(&self, dual: &Dual, j: usize) -> Vec<f64> {
        let n = dual.n;
        let col: Vec<f64> = (0..n).map(|i| dual.entry(i, j)).collect();
        (0..n)
            .map(|k| (0..n).map(|i| self.inverse[k * n + i] * col[i]).sum())
            .collect()
    }

    fn pivot(&mut self, dual: &Dual, row: usize, j: usize, dir: &[f64]) -> bool {
        let n = dual.n;
        let p = dir[row];
        for i in 0..n {
            self.inverse[row * n + i] /= p;
        }
        self.values[row] /= p;
        for (k, &f) in dir.iter().enumerate() {
            if k != row && f != 0.0 {
                for i in 0..n {
                    self.inverse[k * n + i] -= f * self.inverse[row * n + i];
                }
                self.values[k] -= f * self.values[row];
            }
        }
        self.in_basis[self.basis[row]] = false;
        self.basis[row] = j;
        self.in_basis[j] = true;
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFACTOR_EVERY) {
            return self.refactor(dual);
        }
        true
    }

    /// Recompute the inverse and basic values from scratch.
    fn refactor(&mut self, dual: &Dual) -> bool {
        let n = dual.n;
        let b = DMatrix::from_fn(n, n, |i, k| dual.entry(i, self.basis[k]));
        let Some(inv) = b.try_inverse() else {
            return false;
        };
        for k in 0..n {
            for i in 0..n {
                self.inverse[k * n + i] = inv[(k, i)];
            }
        }
        for k in 0..n {
            let v: f64 = (0..n)
                .map(|i| inv[(k, i)] * dual.target[i] * dual.sign[i])
                .sum();
            self.values[k] = v.max(0.0);
        }
        true
    }

    fn run(&mut self, dual: &Dual, phase_one: bool) -> Phase {
        let mut rechecked = false;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Phase::Stalled;
            }
            let y = self.multipliers(dual, phase_one);
            // Reduced costs cancel terms of the size of the multipliers.
            let tol = PRICE_TOL * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            // Bland: lowest-index improving column.
            let entering = (0..dual.num_cols()).find(|&j| {
                !self.in_basis[j]
                    && !(dual.is_artificial(j) && !phase_one)
                    && dual.cost(j, phase_one) - dual.dot_column(&y, j) < -tol
            });
            let Some(j) = entering else {
                return Phase::Optimal;
            };
            let dir = self.direction(dual, j);
            let Some(row) = self.leaving_row(&dir) else {
                // Confirm on a fresh factorization before believing a ray.
                if rechecked || !self.refactor(dual) {
                    return Phase::Unbounded;
                }
                rechecked = true;
                continue;
            };
            rechecked = false;
            if !self.pivot(dual, row, j, &dir) {
                return Phase::Stalled;
            }
        }
    }

    /// Minimum-ratio row. Among rows within rounding of the minimum the
    /// largest pivot element wins, then the lowest basic index.
    fn leaving_row(&self, dir: &[f64]) -> Option<usize> {
        let scale = dir.iter().fold(1.0f64, |m, d| m.max(d.abs()));
        let tol = PIVOT_TOL * scale;
        let ratio = |k: usize| self.values[k].max(0.0) / dir[k];
        let min = (0..dir.len())
            .filter(|&k| dir[k] > tol)
            .map(ratio)
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return None;
        }
        let slack = 1e-12 * (1.0 + min);
        (0..dir.len())
            .filter(|&k| dir[k] > tol && ratio(k) <= min + slack)
            .max_by(|&a, &b| {
                dir[a]
                    .partial_cmp(&dir[b])
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(self.basis[b].cmp(&self.basis[a]))
            })
    }

    /// Pivot basic artificials (all at zero after a successful phase one)
    /// out of the basis.
    fn expel_artificials(&mut self, dual: &Dual) -> bool {
        let n = dual.n;
        for row in 0..n {
            if !dual.is_artificial(self.basis[row]) {
                continue;
            }
            let mut candidate: Option<(usize, f64)> = None;
            for j in 0..dual.num_structural() {
                if self.in_basis[j] {
                    continue;
                }
                let e: f64 = (0..n).map(|i| self.inverse[row * n + i] * dual.entry(i, j)).sum();
                if e.abs() > 1e-7 && candidate.is_none_or(|(_, best)| e.abs() > best) {
                    candidate = Some((j, e.abs()));
                }
            }
            let candidate = candidate.map(|(j, _)| j);
            if let Some(j) = candidate {
                let dir = self.direction(dual, j);
                if !self.pivot(dual, row, j, &dir) {
                    return false;
                }
            }
        }
        true
    }
}

/// Solve `lp`. Deterministic: the same problem always takes the same pivots.
pub fn solve_lp(lp: &LpProblem) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();
    if n == 0 {
        return Ok(if lp.rows.iter().all(|r| r.rhs >= -RESIDUAL_TOL) {
            LpOutcome::Optimal {
                values: Vec::new(),
                objective: 0.0,
            }
        } else {
            LpOutcome::Infeasible
        });
    }
    let vars = Substitution::new(lp);
    let cols = vars.num_parts();
    let mut rows = Vec::with_capacity(lp.rows.len() + cols);
    let mut rhs = Vec::with_capacity(lp.rows.len() + cols);
    for row in &lp.rows {
        let (coeffs, shift) = vars.row(&row.coeffs);
        let b = row.rhs - shift;
        let scale = coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            if b < -RESIDUAL_TOL {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        rows.push(coeffs.iter().map(|a| a / scale).collect::<Vec<f64>>());
        rhs.push(b / scale);
    }
    for (k, cap) in vars.caps.iter().enumerate() {
        if cap.is_finite() {
            let mut e = vec![0.0; cols];
            e[k] = 1.0;
            rows.push(e);
            rhs.push(*cap);
        }
    }
    let (objective, _) = vars.row(&lp.objective);
    let cscale = objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let target: Vec<f64> = if cscale > 0.0 {
        objective.iter().map(|c| c / cscale).collect()
    } else {
        vec![0.0; cols]
    };
    match solve_dual(rows, rhs, target)? {
        DualOutcome::Solved(parts) => {
            let values = vars.recover(&parts, lp);
            if lp.max_violation(&values) > RESIDUAL_TOL {
                return Ok(LpOutcome::Stalled);
            }
            let objective = lp.objective.iter().zip(&values).map(|(c, y)| c * y).sum();
            Ok(LpOutcome::Optimal { values, objective })
        }
        DualOutcome::Unbounded => Ok(LpOutcome::Infeasible),
        DualOutcome::Stalled => Ok(LpOutcome::Stalled),
        DualOutcome::Infeasible => {
            // The primal is infeasible or unbounded; the zero objective tells
            // which.
            if cscale == 0.0 {
                return Ok(LpOutcome::Infeasible);
            }
            let feas = LpProblem {
                objective: vec![0.0; n],
                ..lp.clone()
            };
            Ok(match solve_lp(&feas)? {
                LpOutcome::Optimal { .. } => LpOutcome::Unbounded,
                LpOutcome::Stalled => LpOutcome::Stalled,
                _ => LpOutcome::Infeasible,
            })
        }
    }
}

/// Offset, `(part, sign)` pairs and how many of them are used.
type PartMap = (f64, [(usize, f64); 2], usize);

/// Nonnegative parts standing in for the bounded variables: `y = l + p` when
/// `l >= 0`, `y = u - p` when `u <= 0`, and `y = p - q` otherwise. Keeping
/// zero at zero keeps small solutions small, whatever the box.
struct Substitution {
    maps: Vec<PartMap>,
    /// Upper bound of each part.
    caps: Vec<f64>,
}

impl Substitution {
    fn new(lp: &LpProblem) -> Self {
        let mut maps = Vec::with_capacity(lp.num_vars());
        let mut caps = Vec::new();
        for (&l, &u) in lp.lower.iter().zip(&lp.upper) {
            let k = caps.len();
            if l >= 0.0 {
                caps.push(u - l);
                maps.push((l, [(k, 1.0), (0, 0.0)], 1));
            } else if u <= 0.0 {
                caps.push(u - l);
                maps.push((u, [(k, -1.0), (0, 0.0)], 1));
            } else {
                caps.push(u);
                caps.push(-l);
                maps.push((0.0, [(k, 1.0), (k + 1, -1.0)], 2));
            }
        }
        Substitution { maps, caps }
    }

    fn num_parts(&self) -> usize {
        self.caps.len()
    }

    /// Coefficients over the parts and the constant contributed by offsets.
    fn row(&self, coeffs: &[f64]) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; self.caps.len()];
        let mut shift = 0.0;
        for (a, (offset, parts, len)) in coeffs.iter().zip(&self.maps) {
            shift += a * offset;
            for &(k, sign) in &parts[..*len] {
                out[k] += a * sign;
            }
        }
        (out, shift)
    }

    fn recover(&self, parts: &[f64], lp: &LpProblem) -> Vec<f64> {
        self.maps
            .iter()
            .zip(lp.lower.iter().zip(&lp.upper))
            .map(|((offset, p, len), (l, u))| {
                let y = offset + p[..*len].iter().map(|&(k, sign)| sign * parts[k]).sum::<f64>();
                y.clamp(*l, *u)
            })
            .collect()
    }
}

enum DualOutcome {
    Solved(Vec<f64>),
    Infeasible,
    Unbounded,
    Stalled,
}

fn solve_dual(rows: Vec<Vec<f64>>, rhs: Vec<f64>, target: Vec<f64>) -> Result<DualOutcome> {
    let n = target.len();
    let sign: Vec<f64> = target.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect();
    let dual = Dual {
        n,
        rows,
        rhs,
        sign,
        target,
    };
    let mut t = Tableau::new(&dual);
    if t.has_artificials(&dual) {
        match t.run(&dual, true) {
            Phase::Optimal => {}
            Phase::Unbounded | Phase::Stalled => return Ok(DualOutcome::Stalled),
        }
    }
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.values)
        .filter(|(j, _)| dual.is_artificial(**j))
        .map(|(_, v)| *v)
        .sum();
    if infeasibility > 1e-9 {
        return Ok(DualOutcome::Infeasible);
    }
    if !t.expel_artificials(&dual) {
        return Ok(DualOutcome::Stalled);
    }
    t.pivots = 0;
    match t.run(&dual, false) {
        Phase::Optimal => {}
        Phase::Unbounded => return Ok(DualOutcome::Unbounded),
        Phase::Stalled => return Ok(DualOutcome::Stalled),
    }
    if !t.refactor(&dual) {
        return Ok(DualOutcome::Stalled);
    }
    let y = t.multipliers(&dual, false);
    Ok(DualOutcome::Solved(
        y.iter().zip(&dual.sign).map(|(v, s)| (v * s).max(0.0)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn row(coeffs: &[f64], rhs: f64) -> LpRow {
        LpRow {
            coeffs: coeffs.to_vec(),
            rhs,
        }
    }

    #[test]
    fn single_variable() {
        let lp = LpProblem {
            objective: vec![1.0],
            rows: vec![row(&[1.0], 1.0)],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        };
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal { values, objective } => {
                assert!((values[0] - 1.0).abs() < 1e-12);
                assert!((objective - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contradictory_rows() {
        let lp = LpProblem {
            objective: vec![1.0],
            rows: vec![row(&[1.0], 1.0), row(&[-1.0], -2.0)],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let lp = LpProblem {
            objective: vec![1.0, 1.0],
            rows: vec![row(&[1.0, -1.0], 1.0)],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_lower_bounds_and_minimization() {
        // min x + y  s.t. x + y >= -3, x, y in [-5, 5]
        let lp = LpProblem {
            objective: vec![-1.0, -1.0],
            rows: vec![row(&[-1.0, -1.0], 3.0)],
            lower: vec![-5.0, -5.0],
            upper: vec![5.0, 5.0],
        };
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal { objective, values } => {
                assert!((objective - 3.0).abs() < 1e-9);
                assert!(lp.max_violation(&values) <= 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Best objective over all vertices: every choice of `n` active
    /// constraints among rows and bounds.
    fn vertex_enumeration(lp: &LpProblem) -> Option<f64> {
        let n = lp.num_vars();
        let mut cons: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cons.push((e.clone(), lp.upper[j]));
            e[j] = -1.0;
            cons.push((e, -lp.lower[j]));
        }
        let total = cons.len();
        let mut best: Option<f64> = None;
        let mut pick: Vec<usize> = (0..n).collect();
        loop {
            let a = DMatrix::from_fn(n, n, |i, k| cons[pick[i]].0[k]);
            let b = nalgebra::DVector::from_fn(n, |i, _| cons[pick[i]].1);
            if let Some(x) = a.lu().solve(&b) {
                let y: Vec<f64> = x.iter().copied().collect();
                if y.iter().all(|v| v.is_finite()) && lp.max_violation(&y) <= 1e-9 {
                    let obj: f64 = lp.objective.iter().zip(&y).map(|(c, v)| c * v).sum();
                    best = Some(best.map_or(obj, |b: f64| b.max(obj)));
                }
            }
            // next combination
            let mut i = n;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if pick[i] < total - n + i {
                    pick[i] += 1;
                    for k in i + 1..n {
                        pick[k] = pick[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn random_problems_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = 6;
            let rows: Vec<LpRow> = (0..10)
                .map(|_| LpRow {
                    coeffs: (0..n).map(|_| uniform(&mut rng) * 2.0 - 1.0).collect(),
                    rhs: uniform(&mut rng) * 3.0,
                })
                .collect();
            let lp = LpProblem {
                objective: (0..n).map(|_| uniform(&mut rng) * 2.0 - 1.0).collect(),
                rows,
                lower: vec![0.0; n],
                upper: vec![10.0; n],
            };
            let expected = vertex_enumeration(&lp).expect("origin is feasible");
            match solve_lp(&lp).unwrap() {
                LpOutcome::Optimal { objective, values } => {
                    assert!((objective - expected).abs() <= 1e-8, "{objective} vs {expected}");
                    assert!(lp.max_violation(&values) <= RESIDUAL_TOL);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn repeated_solves_agree() {
        let lp = LpProblem {
            objective: vec![1.0, 2.0, -1.0],
            rows: vec![row(&[1.0, 1.0, 1.0], 4.0), row(&[1.0, 3.0, 0.0], 6.0), row(&[-1.0, 0.0, 2.0], 1.0)],
            lower: vec![0.0, 0.0, -1.0],
            upper: vec![3.0, 3.0, 3.0],
        };
        assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }
}
