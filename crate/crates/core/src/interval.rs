//! Closed intervals with directed (outward) rounding.
//!
//! Every operation returns an interval that contains the exact real result of
//! the same operation applied to any points of the operands. Rounding is only
//! widened when the floating-point result is inexact, so exactly representable
//! computations stay tight (e.g. `[1, 3]` for `2x + 1` over `[0, 1]`).

use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Products and quotients smaller than this are widened unconditionally:
/// their error-free transformations are not exact in the subnormal range.
/// Sums need no such guard.
const TINY: f64 = 1e-290;

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[inline]
pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::NEG_INFINITY } else { s };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::INFINITY } else { s };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { f64::NEG_INFINITY } else { p };
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    if libm::fma(a, b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { f64::INFINITY } else { p };
    }
    if p.abs() < TINY {
        return p.next_up();
    }
    if libm::fma(a, b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

/// Sign of the residual `a - q*b`, i.e. whether `a / b` lies above `q`.
#[inline]
fn div_residual_sign(a: f64, b: f64, q: f64) -> f64 {
    let r = libm::fma(-q, b, a);
    if r == 0.0 {
        0.0
    } else if (r < 0.0) == (b < 0.0) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub(crate) fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() {
        return if q.is_nan() { f64::NEG_INFINITY } else { q };
    }
    if q.abs() < TINY {
        return q.next_down();
    }
    if div_residual_sign(a, b, q) < 0.0 {
        q.next_down()
    } else {
        q
    }
}

#[inline]
pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() {
        return if q.is_nan() { f64::INFINITY } else { q };
    }
    if q.abs() < TINY {
        return q.next_up();
    }
    if div_residual_sign(a, b, q) > 0.0 {
        q.next_up()
    } else {
        q
    }
}

/// A closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Enclosure of `hi - lo` for a pair of floats.
    pub fn width_of(lo: f64, hi: f64) -> Self {
        Interval {
            lo: add_down(hi, -lo),
            hi: add_up(hi, -lo),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Multiply by an exact scalar.
    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval {
                lo: mul_down(self.lo, c),
                hi: mul_up(self.hi, c),
            }
        } else {
            Interval {
                lo: mul_down(self.hi, c),
                hi: mul_up(self.lo, c),
            }
        }
    }

    /// Divide by an exact positive scalar.
    pub fn div_pos(&self, c: f64) -> Interval {
        debug_assert!(c > 0.0);
        Interval {
            lo: div_down(self.lo, c),
            hi: div_up(self.hi, c),
        }
    }

    /// Integer power with the even-power case handled exactly (`[-1,1]^2 = [0,1]`).
    pub fn powi(&self, e: u32) -> Interval {
        match e {
            0 => Interval::ONE,
            1 => *self,
            _ => {
                let mut acc = Interval::ONE;
                for _ in 0..e {
                    acc = acc * *self;
                }
                if e.is_multiple_of(2) && self.lo < 0.0 && self.hi > 0.0 {
                    // Repeated multiplication of a sign-straddling interval loses
                    // the nonnegativity of even powers.
                    acc.lo = 0.0;
                }
                acc
            }
        }
    }
}

impl From<[f64; 2]> for Interval {
    fn from(a: [f64; 2]) -> Self {
        Interval { lo: a[0], hi: a[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval { lo, hi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_operations_stay_tight() {
        let a = Interval::point(1.0) + Interval::point(2.0);
        assert_eq!(a, Interval::point(3.0));
        let m = Interval::point(0.5) * Interval::point(4.0);
        assert_eq!(m, Interval::point(2.0));
    }

    #[test]
    fn inexact_sum_is_widened() {
        let s = Interval::point(0.1) + Interval::point(0.2);
        assert!(s.lo < s.hi);
        assert!(s.lo <= 0.30000000000000004 && 0.3 <= s.hi);
    }

    #[test]
    fn division_brackets_true_quotient() {
        let q = Interval::point(1.0).div_pos(3.0);
        assert!(q.lo < q.hi);
        assert!(q.lo * 3.0 <= 1.0 && q.hi * 3.0 >= 1.0);
    }

    #[test]
    fn even_power_of_straddling_interval_is_nonnegative() {
        let x = Interval::new(-1.0, 1.0);
        assert_eq!(x.powi(2), Interval::new(0.0, 1.0));
        assert_eq!(x.powi(3), Interval::new(-1.0, 1.0));
    }
}
