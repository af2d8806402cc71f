//! Turning certificates of the classical conditions into certificates of the
//! relaxed ones.

use alloc::format;
use alloc::string::String;

use libm::ceil;

use super::{Certificate, Params, DEFAULT_DELTA};
use crate::model::ProblemSpec;
use crate::poly::Polynomial;
use crate::regioncheck::{bound_supremum, prove_sign, CheckConfig, SignObligation, Status};
use crate::{Error, Result};

/// `1 - v`.
pub fn dualize(v: &Polynomial) -> Polynomial {
    (-v).add_constant(1.0)
}

/// Keep `v`, set `w = 0` and the same `eps`: a P1 certificate as a P7 one.
///
/// The only fact the embedding relies on beyond the P1 conditions is
/// `v >= 0` on `X`, which is re-proved here.
pub fn embed_zero_w(cert: &Certificate, spec: &ProblemSpec, config: &CheckConfig) -> Result<Certificate> {
    let ob = SignObligation::ge("nonnegative", cert.v.clone(), spec.x().clone());
    let out = prove_sign(&ob, config);
    match out.status {
        Status::Proved => {}
        Status::Disproved => {
            let w = out.witness.expect("refutations carry a witness");
            return Err(Error::Precondition(format!(
                "v is negative on X: v({:?}) = {:?}",
                w.point, w.value
            )));
        }
        Status::Unknown => {
            return Err(Error::Precondition(String::from("could not prove v >= 0 on X")));
        }
    }
    Ok(Certificate {
        v: cert.v.clone(),
        w: Some(Polynomial::zero(cert.v.arity())),
        params: Params {
            eps: cert.params.eps,
            ..Params::default()
        },
    })
}

/// Certified upper bound on `sup_X (1 - v)`, the quantity `embed_supermartingale`
/// needs.
pub fn embedding_supremum(cert: &Certificate, spec: &ProblemSpec, config: &CheckConfig) -> Result<f64> {
    bound_supremum(&dualize(&cert.v), spec.x(), config)
}

/// From a P2 certificate `v` with decrease margin `delta`, build the P6
/// certificate `u = 1 - v`, `w = M u` with `M = 2 max(ceil(sup_bound / delta), 1)`,
/// where `sup_bound >= sup_X u`.
pub fn embed_supermartingale(cert: &Certificate, sup_bound: f64) -> Result<Certificate> {
    let delta = cert.params.delta.unwrap_or(DEFAULT_DELTA);
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::ParameterRange {
            name: "delta",
            value: delta,
        });
    }
    if !sup_bound.is_finite() {
        return Err(Error::ParameterRange {
            name: "sup_bound",
            value: sup_bound,
        });
    }
    let scale = 2.0 * ceil(sup_bound / delta).max(1.0);
    let u = dualize(&cert.v);
    Ok(Certificate {
        w: Some(u.scale(scale)),
        v: u,
        params: Params {
            eps: cert.params.eps,
            scale_m: Some(scale),
            ..Params::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    #[test]
    fn scale_from_supremum() {
        let cert = Certificate {
            v: Polynomial::constant(1, 0.5),
            w: None,
            params: Params {
                delta: Some(0.1),
                eps: Some(0.2),
                ..Params::default()
            },
        };
        let out = embed_supermartingale(&cert, 2.0).unwrap();
        assert_eq!(out.params.scale_m, Some(40.0));
        assert_eq!(out.v.as_constant(), Some(0.5));
        assert_eq!(out.w.unwrap().as_constant(), Some(20.0));
    }

    #[test]
    fn zero_delta_is_rejected() {
        let cert = Certificate {
            v: Polynomial::constant(1, 0.5),
            w: None,
            params: Params {
                delta: Some(0.0),
                ..Params::default()
            },
        };
        assert!(matches!(
            embed_supermartingale(&cert, 2.0),
            Err(Error::ParameterRange { name: "delta", .. })
        ));
        let cert = Certificate {
            params: Params::default(),
            ..cert
        };
        assert!(embed_supermartingale(&cert, f64::INFINITY).is_err());
    }

    #[test]
    fn dualize_examples() {
        assert!(dualize(&Polynomial::constant(1, 1.0)).is_zero());
        let v = parse_poly("0.1*x", &["x"]).unwrap();
        let u = dualize(&v);
        assert_eq!(u.eval(&[5.0]), 0.5);
        assert_eq!(dualize(&u), v);
    }
}
