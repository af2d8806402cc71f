//! Rigorous range enclosures over boxes.

use alloc::vec;
use alloc::vec::Vec;

use super::Polynomial;
use crate::interval::Interval;

/// Above this total degree the Bernstein transform is skipped.
pub const BERNSTEIN_DEGREE_CAP: u32 = 40;

/// Largest Bernstein coefficient tensor built before falling back.
const TENSOR_CAP: usize = 1 << 20;

/// Guaranteed bounds on a polynomial over a box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeEnclosure {
    pub lo: f64,
    pub hi: f64,
}

impl From<Interval> for RangeEnclosure {
    fn from(i: Interval) -> Self {
        RangeEnclosure { lo: i.lo, hi: i.hi }
    }
}

/// Term-by-term interval evaluation.
pub fn enclose_range_natural(p: &Polynomial, dom: &[Interval]) -> RangeEnclosure {
    p.eval_interval(dom).into()
}

/// Enclose `{p(x) : x in dom}` using Bernstein coefficients of `p` on the box.
///
/// The box is mapped affinely onto the unit cube, the shifted polynomial is
/// expanded with interval coefficients, and each dimension is converted to the
/// Bernstein basis. The enclosure is the hull of the Bernstein coefficients,
/// which is exact at the vertices (hence exact for multilinear polynomials).
pub fn enclose_range(p: &Polynomial, dom: &[Interval]) -> RangeEnclosure {
    assert_eq!(dom.len(), p.arity(), "box arity must equal polynomial arity");
    if let Some(c) = p.as_constant() {
        return RangeEnclosure { lo: c, hi: c };
    }
    if dom.iter().any(|d| !d.lo.is_finite() || !d.hi.is_finite()) {
        return RangeEnclosure {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        };
    }
    let n = p.arity();
    let degs: Vec<usize> = (0..n)
        .map(|i| {
            if dom[i].lo == dom[i].hi {
                0
            } else {
                p.degree_in(i) as usize
            }
        })
        .collect();
    let size = degs
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(d + 1))
        .unwrap_or(usize::MAX);
    if p.degree() > BERNSTEIN_DEGREE_CAP || size > TENSOR_CAP {
        return enclose_range_natural(p, dom);
    }

    // Per dimension, the u-expansion of (lo + w*u)^e for every exponent used.
    let expansions: Vec<Vec<Vec<Interval>>> = (0..n)
        .map(|i| shifted_powers(dom[i].lo, dom[i].hi, p.degree_in(i) as usize, degs[i]))
        .collect();

    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * (degs[i + 1] + 1);
    }

    let mut tensor = vec![Interval::ZERO; size];
    let mut idx = vec![0usize; n];
    for (m, &c) in p.terms() {
        // Iterate over the product of the per-dimension expansions.
        let factors: Vec<&Vec<Interval>> =
            (0..n).map(|i| &expansions[i][m.0[i] as usize]).collect();
        idx.iter_mut().for_each(|k| *k = 0);
        'odometer: loop {
            let mut val = Interval::point(c);
            let mut flat = 0;
            for i in 0..n {
                val = val * factors[i][idx[i]];
                flat += idx[i] * strides[i];
            }
            tensor[flat] = tensor[flat] + val;
            let mut i = n;
            loop {
                if i == 0 {
                    break 'odometer;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < factors[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    for i in 0..n {
        if degs[i] > 0 {
            to_bernstein_along(&mut tensor, &degs, &strides, i);
        }
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for b in &tensor {
        lo = lo.min(b.lo);
        hi = hi.max(b.hi);
    }
    RangeEnclosure { lo, hi }
}

/// `out[e][k]` encloses the coefficient of `u^k` in `(lo + (hi - lo) u)^e`,
/// for `e <= max_exp`, truncated to `k <= deg` (a degenerate dimension has
/// `deg = 0` and contributes only `lo^e`).
fn shifted_powers(lo: f64, hi: f64, max_exp: usize, deg: usize) -> Vec<Vec<Interval>> {
    let base = Interval::point(lo);
    let width = if deg == 0 {
        Interval::ZERO
    } else {
        Interval::width_of(lo, hi)
    };
    let mut out = Vec::with_capacity(max_exp + 1);
    out.push(vec![Interval::ONE]);
    for e in 1..=max_exp {
        let prev: &Vec<Interval> = &out[e - 1];
        let len = (prev.len() + 1).min(deg + 1);
        let mut next = vec![Interval::ZERO; len];
        for (k, a) in prev.iter().enumerate() {
            next[k] = next[k] + *a * base;
            if k + 1 < len {
                next[k + 1] = next[k + 1] + *a * width;
            }
        }
        out.push(next);
    }
    out
}

pub(crate) fn binomial_row(d: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..d {
        let mut next = vec![1.0; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row
}

/// Convert power-basis coefficients along dimension `dim` to Bernstein
/// coefficients: `b_k = sum_{j<=k} C(k,j)/C(d,j) a_j`.
fn to_bernstein_along(tensor: &mut [Interval], degs: &[usize], strides: &[usize], dim: usize) {
    let d = degs[dim];
    let rows: Vec<Vec<f64>> = (0..=d).map(binomial_row).collect();
    let stride = strides[dim];
    let block = stride * (d + 1);
    let mut line = vec![Interval::ZERO; d + 1];
    let mut out = vec![Interval::ZERO; d + 1];
    for outer in (0..tensor.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for j in 0..=d {
                line[j] = tensor[base + j * stride].div_pos(rows[d][j]);
            }
            for k in 0..=d {
                let mut acc = Interval::ZERO;
                for j in 0..=k {
                    acc = acc + line[j].scale(rows[k][j]);
                }
                out[k] = acc;
            }
            for k in 0..=d {
                tensor[base + k * stride] = out[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn constant_is_exact() {
        let p = Polynomial::constant(2, 3.0);
        assert_eq!(
            enclose_range(&p, &[iv(-5.0, 2.0), iv(0.0, 1.0)]),
            RangeEnclosure { lo: 3.0, hi: 3.0 }
        );
    }

    #[test]
    fn linear_is_exact() {
        let p = parse_poly("2*x + 1", &["x"]).unwrap();
        assert_eq!(
            enclose_range(&p, &[iv(0.0, 1.0)]),
            RangeEnclosure { lo: 1.0, hi: 3.0 }
        );
    }

    #[test]
    fn square_on_symmetric_box_matches_bernstein_hull() {
        // Bernstein coefficients of x^2 on [-1,1] are (1, -1, 1).
        let p = parse_poly("x^2", &["x"]).unwrap();
        assert_eq!(
            enclose_range(&p, &[iv(-1.0, 1.0)]),
            RangeEnclosure { lo: -1.0, hi: 1.0 }
        );
    }

    #[test]
    fn degenerate_dimension_is_substituted() {
        let p = parse_poly("x*y + y^2", &["x", "y"]).unwrap();
        let r = enclose_range(&p, &[iv(0.0, 1.0), iv(2.0, 2.0)]);
        assert_eq!(r, RangeEnclosure { lo: 4.0, hi: 6.0 });
    }

    #[test]
    fn high_degree_falls_back_to_interval_extension() {
        let p = parse_poly("x^41 + 1", &["x"]).unwrap();
        let r = enclose_range(&p, &[iv(0.0, 1.0)]);
        assert!(r.lo <= 1.0 && r.hi >= 2.0);
    }

    #[test]
    fn binomial_rows_are_exact() {
        assert_eq!(binomial_row(4), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        assert_eq!(binomial_row(40)[20], 137_846_528_820.0);
    }
}
