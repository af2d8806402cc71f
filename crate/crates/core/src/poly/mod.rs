//! Sparse multivariate polynomials with `f64` coefficients.

mod enclose;
mod parse;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use crate::interval::Interval;
use crate::{Error, Result};

pub use enclose::{enclose_range, enclose_range_natural, RangeEnclosure, BERNSTEIN_DEGREE_CAP};
pub use parse::parse_poly;

/// Exponent vector, one entry per variable.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// vectors compared lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn var(arity: usize, i: usize, exp: u32) -> Self {
        let mut e = vec![0; arity];
        e[i] = exp;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `arity` variables with total degree at most `degree`, in
/// ascending graded-lex order.
pub fn monomials_up_to(arity: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; arity];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == cur.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, degree, &mut cur, &mut out);
    out.sort();
    out
}

/// A polynomial in `arity` variables. Terms with coefficient exactly zero are
/// never stored, so structural equality is polynomial equality.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(arity);
        p.add_term(Monomial::one(arity), c);
        p
    }

    /// The polynomial `x_i`.
    pub fn var(arity: usize, i: usize) -> Self {
        let mut p = Polynomial::zero(arity);
        p.add_term(Monomial::var(arity, i, 1), 1.0);
        p
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut p = Polynomial::zero(arity);
        for (m, c) in terms {
            if m.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: m.arity(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest exponent of variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    /// If the polynomial is a constant (including zero), its value.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Monomial::one(self.arity)).copied(),
            _ => None,
        }
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if *v == 0.0 {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_arity(&self, other: &Polynomial) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -*c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_arity(other)?;
        let mut out = Polynomial::zero(self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.times(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        if s == 0.0 {
            return out;
        }
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// `self + c`.
    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(Monomial::one(self.arity), c);
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut result = Polynomial::constant(self.arity, 1.0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Substitute `subst[i]` for variable `i`. All substitutes share one arity,
    /// which becomes the arity of the result.
    pub fn compose(&self, subst: &[Polynomial]) -> Result<Polynomial> {
        if subst.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: subst.len(),
            });
        }
        let out_arity = match subst.first() {
            Some(s) => s.arity,
            None => {
                // A polynomial in zero variables is a constant.
                return Ok(self.clone());
            }
        };
        for s in subst {
            if s.arity != out_arity {
                return Err(Error::ArityMismatch {
                    expected: out_arity,
                    found: s.arity,
                });
            }
        }
        // Cache powers of each substitute; monomials share them heavily.
        let mut powers: Vec<Vec<Polynomial>> = subst
            .iter()
            .map(|s| vec![Polynomial::constant(out_arity, 1.0), s.clone()])
            .collect();
        let mut out = Polynomial::zero(out_arity);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(out_arity, *c);
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &subst[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][e as usize];
            }
            for (tm, tc) in term.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out)
    }

    /// Value at `point`; rejects wrong lengths and non-finite coordinates.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: point.len(),
            });
        }
        if let Some(i) = point.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(self.eval(point))
    }

    /// Term-sum evaluation without input validation.
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.arity);
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = *c;
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= powi(*x, e);
                }
            }
            acc += t;
        }
        acc
    }

    /// Natural interval extension (term by term) over a box.
    pub fn eval_interval(&self, dom: &[Interval]) -> Interval {
        debug_assert_eq!(dom.len(), self.arity);
        let mut acc = Interval::ZERO;
        for (m, c) in &self.terms {
            let mut t = Interval::point(*c);
            for (x, &e) in dom.iter().zip(&m.0) {
                if e > 0 {
                    t = t * x.powi(e);
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Rigorous enclosure of the exact value at a point.
    pub fn eval_enclosure(&self, point: &[f64]) -> Interval {
        let dom: Vec<Interval> = point.iter().map(|&x| Interval::point(x)).collect();
        self.eval_interval(&dom)
    }

    /// Drop terms with `|coeff| <= tol`.
    pub fn prune(&self, tol: f64) -> Polynomial {
        Polynomial {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// Write the canonical text form using the given variable names:
    /// graded-lex descending terms, 17 significant digits per coefficient.
    pub fn write_canonical(&self, names: &[&str], f: &mut impl fmt::Write) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let mag = c.abs();
            match (idx, *c < 0.0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write!(f, "{:.16e}", mag)?;
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", names[i])?,
                    _ => write!(f, "*{}^{}", names[i], e)?,
                }
            }
        }
        Ok(())
    }

    pub fn to_canonical_string(&self, names: &[&str]) -> alloc::string::String {
        let mut s = alloc::string::String::new();
        self.write_canonical(names, &mut s)
            .expect("writing to a String cannot fail");
        s
    }
}

fn powi(x: f64, e: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..e {
        r *= x;
    }
    r
}

impl fmt::Display for Polynomial {
    /// Canonical text with default names `x1, x2, ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<alloc::string::String> =
            (1..=self.arity).map(|i| alloc::format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        self.write_canonical(&refs, f)
    }
}

// Operator forms panic on arity mismatch; use the `checked_*` methods where
// arities come from user input.

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial arity mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial arity mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial arity mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Polynomial {
        Polynomial::var(1, 0)
    }

    #[test]
    fn graded_lex_orders_by_degree_first() {
        let a = Monomial(vec![0, 2]);
        let b = Monomial(vec![1, 0]);
        let c = Monomial(vec![1, 1]);
        assert!(b < a);
        assert!(c > b);
        assert!(Monomial(vec![2, 0]) > Monomial(vec![1, 1]));
    }

    #[test]
    fn multiply_identity_and_difference_of_squares() {
        let p = &x().scale(3.0) + &Polynomial::constant(1, 2.0);
        assert_eq!(&Polynomial::constant(1, 1.0) * &p, p);
        let d = &x().add_constant(1.0) * &x().add_constant(-1.0);
        assert_eq!(d, &x().pow(2) - &Polynomial::constant(1, 1.0));
    }

    #[test]
    fn zero_terms_are_pruned() {
        let p = &x() - &x();
        assert!(p.is_zero());
        assert_eq!(p, Polynomial::zero(1));
    }

    #[test]
    fn compose_power_rule() {
        let v = x().pow(2);
        let c = v.compose(&[x().scale(0.5)]).unwrap();
        assert_eq!(c, x().pow(2).scale(0.25));
        assert_eq!(v.compose(&[x()]).unwrap(), v);
    }

    #[test]
    fn compose_rejects_wrong_substitution_count() {
        assert!(matches!(
            x().compose(&[x(), x()]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_validates_input() {
        let p = x().pow(2).add_constant(1.0);
        assert_eq!(p.evaluate(&[2.0]).unwrap(), 5.0);
        assert!(p.evaluate(&[f64::NAN]).is_err());
        assert!(p.evaluate(&[1.0, 2.0]).is_err());
        assert_eq!(Polynomial::zero(3).evaluate(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn monomial_basis_counts() {
        assert_eq!(monomials_up_to(1, 2).len(), 3);
        assert_eq!(monomials_up_to(2, 2).len(), 6);
        assert_eq!(monomials_up_to(3, 0), vec![Monomial::one(3)]);
    }

    #[test]
    fn canonical_text_is_graded_lex_descending() {
        let p = &x().pow(2).scale(-0.5) + &Polynomial::constant(1, 1.0);
        assert_eq!(
            p.to_canonical_string(&["x"]),
            "-5.0000000000000000e-1*x^2 + 1.0000000000000000e0"
        );
    }
}
