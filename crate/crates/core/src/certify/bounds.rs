//! Closed-form probability bounds.
//!
//! Parameters are read as the decimal numbers they print as (the shortest
//! round-trip representation), the formula is evaluated in exact rational
//! arithmetic, and the result is rounded once to the nearest `f64`. A bound
//! written as `0.1 + 0.02` therefore comes out as `0.12`.

use alloc::format;
use alloc::string::String;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{Params, PropositionId, Threshold};
use crate::model::Semantics;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Lower,
    Upper,
    AlmostSure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Infinite,
    Steps(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub kind: BoundKind,
    pub value: f64,
    pub horizon: Horizon,
    pub semantics: Semantics,
}

pub(crate) fn require_positive(value: Option<f64>, name: &'static str) -> Result<f64> {
    let v = value.ok_or(Error::MissingParameter(name))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::ParameterRange { name, value: v });
    }
    Ok(v)
}

pub(crate) fn require_nonneg(value: Option<f64>, name: &'static str) -> Result<f64> {
    let v = value.ok_or(Error::MissingParameter(name))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::ParameterRange { name, value: v });
    }
    Ok(v)
}

/// `value` in `(0, 1]`.
pub(crate) fn require_unit_half_open(value: Option<f64>, name: &'static str) -> Result<f64> {
    let v = require_positive(value, name)?;
    if v > 1.0 {
        return Err(Error::ParameterRange { name, value: v });
    }
    Ok(v)
}

/// `value` in `(0, 1)`.
pub(crate) fn require_open_unit(value: Option<f64>, name: &'static str) -> Result<f64> {
    let v = require_unit_half_open(value, name)?;
    if v >= 1.0 {
        return Err(Error::ParameterRange { name, value: v });
    }
    Ok(v)
}

pub(crate) fn require_k(value: Option<usize>) -> Result<usize> {
    match value {
        None => Err(Error::MissingParameter("k")),
        Some(0) => Err(Error::ParameterRange { name: "k", value: 0.0 }),
        Some(k) => Ok(k),
    }
}

pub(crate) fn require_threshold(value: Option<f64>, t: Threshold) -> Result<f64> {
    let name = match t {
        Threshold::Eps => "eps",
        Threshold::EpsPrime => "eps_prime",
    };
    let v = value.ok_or(Error::MissingParameter(name))?;
    if !v.is_finite() {
        return Err(Error::ParameterRange { name, value: v });
    }
    Ok(v)
}

fn require_horizon(value: Option<usize>) -> Result<usize> {
    value.ok_or(Error::MissingParameter("N"))
}

/// The decimal number `x` prints as, exactly.
fn decimal(x: f64) -> BigRational {
    let text = format!("{x}");
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let digits: String = int_part.chars().chain(frac_part.chars()).collect();
    let numer: BigInt = digits.parse().expect("finite f64 prints as digits");
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = BigRational::new(numer, denom);
    if neg {
        -r
    } else {
        r
    }
}

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn pow(base: &BigRational, e: usize) -> BigRational {
    let mut acc = BigRational::one();
    let mut sq = base.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// Nearest `f64` to an exact rational.
fn to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let p = r.numer().abs();
    let q = r.denom().abs();
    // Enough fractional digits for 800 significant ones; every f64 and every
    // midpoint between neighbours has at most 767, so a sticky digit after
    // the cut makes the decimal parse round exactly like the rational.
    let shift = (q.bits() as i64 - p.bits() as i64).max(0) * 31 / 100 + 2;
    let frac_digits = 800 + shift as u32;
    let scaled = p * BigInt::from(10u32).pow(frac_digits);
    let quotient = &scaled / &q;
    let exact = &quotient * &q == scaled;
    let mut text = format!("{quotient}");
    let mut exponent = frac_digits as i64;
    if !exact {
        text.push('1');
        exponent += 1;
    }
    let value: f64 = format!("{text}e-{exponent}").parse().expect("decimal literal");
    if r.is_negative() {
        -value
    } else {
        value
    }
}

/// Direction of the bound `prop` certifies.
pub fn bound_kind(prop: PropositionId) -> BoundKind {
    use PropositionId::*;
    match prop {
        P1 | P4 | P7 | P8 | P10 | P11 | P12 | P14 | P14Alpha | P15 => BoundKind::Upper,
        P2 | P5 | P6 | P6Xhat | P9 | P13 => BoundKind::Lower,
        P3 => BoundKind::AlmostSure,
    }
}

/// Evaluate the bound attached to `prop` at `params`.
pub fn certified_bound(prop: PropositionId, params: &Params) -> Result<Bound> {
    use PropositionId::*;
    let eps = || match prop.threshold() {
        Some(t) => require_threshold(params.threshold(t), t).map(decimal),
        None => Ok(BigRational::zero()),
    };
    let one = BigRational::one();
    let two = int(2);
    // k(k-1)c/2
    let k_triangle = |k: usize, c: f64| int(k) * int(k - 1) * decimal(c) / &two;
    let kind = bound_kind(prop);
    let (value, horizon) = match prop {
        P1 | P7 | P8 => (eps()?, Horizon::Infinite),
        P2 | P6 | P6Xhat | P9 => (eps()?, Horizon::Infinite),
        P3 => (one, Horizon::Infinite),
        P4 | P14 => {
            let k = require_k(params.k)?;
            let c = require_nonneg(params.c, "c")?;
            (int(k) * eps()? + k_triangle(k, c), Horizon::Infinite)
        }
        P5 => {
            let k = require_k(params.k)?;
            let c = require_nonneg(params.c, "c")?;
            (one - int(k) * eps()? - k_triangle(k, c), Horizon::Infinite)
        }
        P13 => (one - eps()?, Horizon::Infinite),
        P10 => {
            let lambda = decimal(require_positive(params.lambda, "lambda")?);
            let n = require_horizon(params.horizon)?;
            let ratio = (&one + &lambda) / lambda;
            (pow(&ratio, n) * eps()?, Horizon::Steps(n))
        }
        P11 => {
            let at = decimal(require_unit_half_open(params.alpha_tilde, "alpha_tilde")?);
            let bt = decimal(require_beta(params.beta_tilde)?);
            let n = require_horizon(params.horizon)?;
            let value = if at == one {
                eps()? + bt * int(n)
            } else {
                let inv_pow = pow(&(&one / &at), n);
                eps()? * &inv_pow + (&one - &inv_pow) * &at * bt / (&at - &one)
            };
            (value, Horizon::Steps(n))
        }
        P12 => {
            let at = decimal(require_open_unit(params.alpha_tilde, "alpha_tilde")?);
            let bt = decimal(require_beta(params.beta_tilde)?);
            let n = require_horizon(params.horizon)?;
            let inv_pow = pow(&(&one / &at), n);
            let numer = eps()? * &inv_pow * (&one - &at) + &at * &bt * &inv_pow;
            let denom = &one + &at * &bt - &at;
            (numer / denom, Horizon::Steps(n))
        }
        P14Alpha => {
            let k = require_k(params.k)?;
            let alpha = decimal(require_positive(params.alpha, "alpha")?);
            // The removable singularity at alpha = 1 is the limit k * eps'.
            let factor = if alpha == one {
                int(k)
            } else {
                (&one - pow(&alpha, k)) / (&one - &alpha)
            };
            (eps()? * factor, Horizon::Infinite)
        }
        P15 => {
            let k = require_k(params.k)?;
            let c = decimal(require_nonneg(params.c, "c")?);
            (eps()? + int(k - 1) * c / two, Horizon::Infinite)
        }
    };
    Ok(Bound {
        kind,
        value: to_f64(&value),
        horizon,
        semantics: prop.semantics(),
    })
}

pub(crate) fn require_beta(value: Option<f64>) -> Result<f64> {
    let b = require_nonneg(value, "beta_tilde")?;
    if b >= 1.0 {
        return Err(Error::ParameterRange {
            name: "beta_tilde",
            value: b,
        });
    }
    Ok(b)
}
