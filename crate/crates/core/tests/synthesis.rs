mod common;

use common::{model_a, model_b, model_c, model_d};
use stochreach_core::certify::{check_certificate, CertifyConfig, Compiler, Params, PropositionId};
use stochreach_core::poly::monomials_up_to;
use stochreach_core::regioncheck::Status;
use stochreach_core::sim::{exact_chain_probability, Lattice};
use stochreach_core::synth::{
    build_lp, synthesize_cegis, SynthConfig, SynthStatus, TemplateEncoding, TemplateSpec,
};
use stochreach_core::{ProblemSpec, Semantics};

use PropositionId::*;

fn template(degree: u32, fixed: Params) -> TemplateSpec {
    TemplateSpec {
        fixed_params: fixed,
        ..TemplateSpec::new(degree)
    }
}

fn evenly(spec: &ProblemSpec, prop: PropositionId, t: &TemplateSpec, counts: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let compiler = Compiler::new(spec, CertifyConfig::default());
    let enc = TemplateEncoding::new(prop, t, &compiler).unwrap();
    enc.obligations()
        .iter()
        .zip(counts)
        .map(|(ob, &n)| {
            let b = ob.region().bounding_box().unwrap();
            (0..n)
                .map(|i| vec![b.lo(0) + (b.hi(0) - b.lo(0)) * i as f64 / (n.max(2) - 1) as f64])
                .filter(|x| ob.region().contains_point(x))
                .collect()
        })
        .collect()
}

#[test]
fn lambda_template_sizes() {
    let spec = model_b();
    for degree in [1, 2, 4] {
        let t = template(degree, Params { lambda: Some(1.0), ..Params::default() });
        let samples = evenly(&spec, P9, &t, &[1, 12, 5, 7]);
        let total: usize = samples.iter().map(Vec::len).sum();
        let lp = build_lp(P9, &t, &spec, &samples, &SynthConfig::default()).unwrap();
        assert_eq!(lp.rows.len(), total);
        assert_eq!(lp.num_vars(), monomials_up_to(1, degree).len() + 1);
    }
}

#[test]
fn unreachable_threshold_is_not_certified() {
    let spec = model_b();
    let t = template(4, Params { eps: Some(1.0), ..Params::default() });
    let config = SynthConfig { max_iterations: 10, ..SynthConfig::default() };
    let result = synthesize_cegis(P6, &t, &spec, &config).unwrap();
    assert_ne!(result.status, SynthStatus::Certified);
}

fn revalidate(prop: PropositionId, spec: &ProblemSpec, degree: u32, fixed: Params) -> f64 {
    let result = synthesize_cegis(prop, &template(degree, fixed), spec, &SynthConfig::default()).unwrap();
    assert_eq!(result.status, SynthStatus::Certified, "{prop}: {:?}", result.reason);
    let cert = result.certificate.unwrap();
    let embedded = result.report.unwrap();
    assert_eq!(embedded.status(), Status::Proved);
    let fresh = check_certificate(prop, &cert, spec, &CertifyConfig::default()).unwrap();
    assert_eq!(fresh.status(), Status::Proved, "{prop}");
    assert_eq!(fresh.bound, embedded.bound);
    fresh.bound.unwrap().value
}

#[test]
fn certified_results_survive_a_fresh_check() {
    let upper = revalidate(P1, &model_c(), 2, Params::default());
    assert!(upper <= 0.0124 + 1e-3);
    let lower = revalidate(P2, &model_d(), 2, Params::default());
    assert!((0.0..=1.0).contains(&lower));
    let discounted = Params { alpha_tilde: Some(0.9), beta_tilde: Some(0.01), horizon: Some(10), ..Params::default() };
    revalidate(P11, &model_a(), 4, discounted);
}

#[test]
fn ruin_lower_bound_respects_the_exact_chain() {
    let spec = model_b();
    let bound = revalidate(P9, &spec, 4, Params { lambda: Some(1.0), ..Params::default() });
    let lattice = Lattice { origin: vec![0.0], step: vec![1.0] };
    let truth = exact_chain_probability(&spec, &lattice, Semantics::ReachAvoid).unwrap().at(&[5.0]).unwrap();
    assert!(bound <= truth + 1e-9, "{bound} > {truth}");
}

#[test]
fn synthesis_is_deterministic() {
    let spec = model_c();
    let t = TemplateSpec::new(3);
    let a = synthesize_cegis(P1, &t, &spec, &SynthConfig::default()).unwrap();
    let b = synthesize_cegis(P1, &t, &spec, &SynthConfig::default()).unwrap();
    assert_eq!(a, b);
}
