use proptest::prelude::*;
use stochreach_core::poly::Monomial;
use stochreach_core::regioncheck::{bound_supremum, prove_sign, CheckConfig, SignObligation, Status};
use stochreach_core::{Hyperbox, Polynomial, RegionSpec};

fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(((0u32..=3, 0u32..=3), -2.0f64..2.0), 1..6).prop_map(|terms| {
        Polynomial::from_terms(2, terms.into_iter().map(|((a, b), c)| (Monomial(vec![a, b]), c))).unwrap()
    })
}

fn region() -> impl Strategy<Value = RegionSpec> {
    prop::collection::vec((-2.0f64..2.0, 0.01f64..1.5, -2.0f64..2.0, 0.01f64..1.5), 1..3).prop_map(|boxes| {
        let pieces = boxes
            .into_iter()
            .map(|(x, w, y, h)| Hyperbox::from_bounds(&[(x, x + w), (y, y + h)]))
            .collect();
        RegionSpec::new(2, pieces).unwrap()
    })
}

fn grid_min(p: &Polynomial, region: &RegionSpec, per_dim: usize) -> f64 {
    let mut best = f64::INFINITY;
    for b in &region.pieces {
        for i in 0..=per_dim {
            for j in 0..=per_dim {
                let u = i as f64 / per_dim as f64;
                let w = j as f64 / per_dim as f64;
                let pt = [b.lo(0) + u * (b.hi(0) - b.lo(0)), b.lo(1) + w * (b.hi(1) - b.lo(1))];
                best = best.min(p.eval(&pt));
            }
        }
    }
    best
}

fn small_config(depth: usize) -> CheckConfig {
    CheckConfig {
        depth_limit: depth,
        tolerance: 1e-9,
        max_boxes: 20_000,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Shifting the polynomial by its sampled minimum makes both verdicts likely.
    #[test]
    fn verdicts_agree_with_dense_sampling(p in poly(), region in region(), shift in -0.2f64..0.2) {
        let p = p.add_constant(-grid_min(&p, &region, 20) + shift);
        let outcome = prove_sign(&SignObligation::ge("probe", p.clone(), region.clone()), &small_config(12));
        match outcome.status {
            Status::Proved => {
                prop_assert!(grid_min(&p, &region, 120) >= -1e-9);
            }
            Status::Disproved => {
                let w = outcome.witness.unwrap();
                prop_assert!(region.contains_point(&w.point));
                prop_assert!(p.eval(&w.point) < -1e-9);
            }
            Status::Unknown => prop_assert!(!outcome.frontier.is_empty()),
        }
    }

    #[test]
    fn margins_are_respected(p in poly(), region in region(), margin in 0.0f64..0.5) {
        let ob = SignObligation::ge("probe", p.clone(), region.clone()).with_margin(margin);
        let outcome = prove_sign(&ob, &small_config(10));
        if outcome.status == Status::Proved {
            prop_assert!(grid_min(&p, &region, 60) >= margin - 1e-9);
        }
        if let Some(w) = outcome.witness {
            prop_assert!(p.eval(&w.point) < margin - 1e-9);
        }
    }

    #[test]
    fn deeper_search_keeps_proofs(p in poly(), region in region()) {
        let p = p.add_constant(-grid_min(&p, &region, 20) + 0.05);
        let shallow = prove_sign(&SignObligation::ge("probe", p.clone(), region.clone()), &small_config(6));
        if shallow.status == Status::Proved {
            let deep = prove_sign(&SignObligation::ge("probe", p, region), &small_config(12));
            prop_assert_eq!(deep.status, Status::Proved);
        }
    }

    #[test]
    fn supremum_bounds_every_sample(p in poly(), region in region()) {
        let sup = bound_supremum(&p, &region, &small_config(10)).unwrap();
        let neg = -&p;
        prop_assert!(-grid_min(&neg, &region, 60) <= sup + 1e-9);
    }
}

#[test]
fn empty_region_is_vacuous() {
    let p = Polynomial::constant(2, -1.0);
    let outcome = prove_sign(&SignObligation::ge("none", p, RegionSpec::empty(2)), &CheckConfig::default());
    assert_eq!(outcome.status, Status::Proved);
}

#[test]
fn linear_polynomial_is_decided_without_bisection() {
    let p = Polynomial::var(2, 0).add_constant(1.0);
    let region = RegionSpec::from_box(Hyperbox::from_bounds(&[(0.0, 1.0), (-5.0, 5.0)]));
    let outcome = prove_sign(&SignObligation::ge("affine", p, region), &CheckConfig::default());
    assert_eq!(outcome.status, Status::Proved);
    assert_eq!(outcome.max_depth, 0);
}

#[test]
fn touching_zero_is_accepted_within_tolerance() {
    // x^2 has minimum exactly 0 at the origin.
    let p = &Polynomial::var(2, 0) * &Polynomial::var(2, 0);
    let region = RegionSpec::from_box(Hyperbox::from_bounds(&[(-1.0, 1.0), (-1.0, 1.0)]));
    let outcome = prove_sign(&SignObligation::ge("square", p.clone(), region.clone()), &CheckConfig::default());
    assert_eq!(outcome.status, Status::Proved);
    let strict = prove_sign(&SignObligation::ge("square", p, region).with_margin(1e-6), &CheckConfig::default());
    assert_eq!(strict.status, Status::Disproved);
    assert_eq!(strict.witness.unwrap().point, vec![0.0, 0.0]);
}
