//! Template-based certificate synthesis.
//!
//! A certificate is a linear combination of basis polynomials, and every
//! obligation a proposition compiles to is affine in the coefficients (the
//! expectation operators are linear). Sampling the obligations therefore
//! gives a linear program. Its solution is only a candidate: the rigorous
//! checker decides, and its counterexamples are fed back as new samples.

pub mod lp;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::certify::{
    bound_kind, check_with, BoundKind, CertReport, Certificate, CertifyConfig, CompiledObligation, Compiler,
    ObligationKind, Params, PropositionId,
};
use crate::expectation::stopped_endpoints;
use crate::geometry::{Hyperbox, RegionSpec};
use crate::model::ProblemSpec;
use crate::poly::{monomials_up_to, Polynomial};
use crate::regioncheck::Status;
use crate::sim::trial_rng;
use crate::{Error, Result};

pub use lp::{solve_lp, LpOutcome, LpProblem, LpRow};

/// Highest template degree accepted.
pub const MAX_TEMPLATE_DEGREE: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Push a lower bound up.
    MaximizeLower,
    /// Push an upper bound down.
    MinimizeUpper,
    /// Any certificate will do.
    Feasibility,
}

impl Objective {
    pub fn default_for(prop: PropositionId) -> Objective {
        match bound_kind(prop) {
            BoundKind::Lower => Objective::MaximizeLower,
            BoundKind::Upper => Objective::MinimizeUpper,
            BoundKind::AlmostSure => Objective::Feasibility,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub degree_v: u32,
    pub degree_w: u32,
    /// Give `w` its own coefficients. Otherwise `w = M v` for the
    /// propositions whose coupling is lower-bounding (P6, P13) and `w = 0`
    /// for the rest.
    pub use_w: bool,
    /// Parameters held fixed. A threshold given here is not optimized.
    #[serde(default)]
    pub fixed_params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
}

impl TemplateSpec {
    pub fn new(degree_v: u32) -> Self {
        TemplateSpec {
            degree_v,
            degree_w: degree_v,
            use_w: false,
            fixed_params: Params::default(),
            objective: None,
        }
    }
}

/// Default `M` of the pinned `w = M v`.
pub const DEFAULT_SCALE_M: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub certify: CertifyConfig,
    /// Slack `gamma` added to every sampled row.
    pub slack: f64,
    /// Box bound on every template coefficient.
    pub coeff_bound: f64,
    pub grid_per_dim: usize,
    pub random_per_region: usize,
    /// Frontier boxes turned into samples per undecided obligation.
    pub frontier_samples: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            certify: CertifyConfig::default(),
            slack: 1e-4,
            coeff_bound: 1e4,
            grid_per_dim: 5,
            random_per_region: 64,
            frontier_samples: 32,
            max_iterations: 40,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthStatus {
    Certified,
    Infeasible,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthResult {
    pub status: SynthStatus,
    /// The certified certificate, or the last candidate.
    pub certificate: Option<Certificate>,
    pub report: Option<CertReport>,
    pub iterations: usize,
    pub samples_used: usize,
    /// Why the loop stopped, for anything but `Certified`.
    pub reason: Option<String>,
}

/// Monomials of total degree `<= degree` in coordinates rescaled so that
/// `frame` maps to `[-1, 1]^n`, expanded back to polynomials in `x`.
pub fn template_basis(n: usize, degree: u32, frame: &Hyperbox) -> Result<Vec<Polynomial>> {
    if degree > MAX_TEMPLATE_DEGREE {
        return Err(Error::DegreeCap {
            degree,
            cap: MAX_TEMPLATE_DEGREE,
        });
    }
    if frame.dim() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: frame.dim(),
        });
    }
    let normalized: Vec<Polynomial> = (0..n)
        .map(|i| {
            let center = 0.5 * (frame.lo(i) + frame.hi(i));
            let half = 0.5 * (frame.hi(i) - frame.lo(i));
            let half = if half > 0.0 { half } else { 1.0 };
            Polynomial::var(n, i).add_constant(-center).scale(1.0 / half)
        })
        .collect();
    let basis: Vec<Polynomial> = monomials_up_to(n, degree)
        .into_iter()
        .map(|m| {
            let mono = Polynomial::from_terms(n, [(m, 1.0)])?;
            mono.compose(&normalized)
        })
        .collect::<Result<_>>()?;
    if basis.is_empty() {
        return Err(Error::Template(String::from("empty template basis")));
    }
    Ok(basis)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WShape {
    None,
    Free,
    ScaledV,
    Zero,
}

/// The affine map from template coefficients to compiled obligations.
#[derive(Debug)]
pub struct TemplateEncoding<'a> {
    prop: PropositionId,
    compiler: &'a Compiler<'a>,
    params: Params,
    basis_v: Vec<Polynomial>,
    basis_w: Vec<Polynomial>,
    w_shape: WShape,
    scale_m: f64,
    threshold_var: bool,
    objective: Objective,
    /// Obligations at the zero coefficient vector.
    base: Vec<CompiledObligation>,
    /// Obligations at each unit coefficient vector.
    units: Vec<Vec<CompiledObligation>>,
}

impl<'a> TemplateEncoding<'a> {
    pub fn new(prop: PropositionId, template: &TemplateSpec, compiler: &'a Compiler<'a>) -> Result<Self> {
        let spec = compiler.spec();
        let n = spec.state_dim();
        let objective = template.objective.unwrap_or(Objective::default_for(prop));
        let compatible = matches!(
            (objective, bound_kind(prop)),
            (Objective::Feasibility, _)
                | (Objective::MaximizeLower, BoundKind::Lower)
                | (Objective::MinimizeUpper, BoundKind::Upper)
        );
        if !compatible {
            return Err(Error::Incompatible(format!(
                "objective {objective:?} does not match the {:?} bound of {prop}",
                bound_kind(prop)
            )));
        }
        let frame = if prop.uses_xhat() { spec.xhat() } else { spec.x() }
            .bounding_box()
            .ok_or(Error::EmptyRegion)?;
        let basis_v = template_basis(n, template.degree_v, &frame)?;
        let w_shape = if !prop.uses_w() {
            WShape::None
        } else if template.use_w {
            WShape::Free
        } else if matches!(prop, PropositionId::P6 | PropositionId::P6Xhat | PropositionId::P13) {
            WShape::ScaledV
        } else {
            WShape::Zero
        };
        let basis_w = if w_shape == WShape::Free {
            template_basis(n, template.degree_w, &frame)?
        } else {
            Vec::new()
        };
        let scale_m = template.fixed_params.scale_m.unwrap_or(DEFAULT_SCALE_M);
        if w_shape == WShape::ScaledV && !(scale_m.is_finite() && scale_m > 0.0) {
            return Err(Error::ParameterRange {
                name: "M",
                value: scale_m,
            });
        }
        let threshold_var = prop
            .threshold()
            .is_some_and(|t| template.fixed_params.threshold(t).is_none());
        let mut enc = TemplateEncoding {
            prop,
            compiler,
            params: template.fixed_params.clone(),
            basis_v,
            basis_w,
            w_shape,
            scale_m,
            threshold_var,
            objective,
            base: Vec::new(),
            units: Vec::new(),
        };
        let zero = vec![0.0; enc.num_vars()];
        enc.base = compiler.compile(prop, &enc.certificate(&zero))?;
        let mut units = Vec::with_capacity(enc.num_vars());
        for i in 0..enc.num_vars() {
            let mut e = zero.clone();
            e[i] = 1.0;
            units.push(compiler.compile(prop, &enc.certificate(&e))?);
        }
        enc.units = units;
        Ok(enc)
    }

    pub fn num_vars(&self) -> usize {
        self.basis_v.len() + self.basis_w.len() + usize::from(self.threshold_var)
    }

    pub fn num_v_coeffs(&self) -> usize {
        self.basis_v.len()
    }

    pub fn obligations(&self) -> &[CompiledObligation] {
        &self.base
    }

    /// The certificate with coefficient vector `y`.
    pub fn certificate(&self, y: &[f64]) -> Certificate {
        let n = self.compiler.spec().state_dim();
        let combine = |basis: &[Polynomial], coeffs: &[f64]| {
            basis
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| **c != 0.0)
                .fold(Polynomial::zero(n), |acc, (b, c)| &acc + &b.scale(*c))
        };
        let nv = self.basis_v.len();
        let nw = self.basis_w.len();
        let v = combine(&self.basis_v, &y[..nv]);
        let mut params = self.params.clone();
        let w = match self.w_shape {
            WShape::None => None,
            WShape::Free => Some(combine(&self.basis_w, &y[nv..nv + nw])),
            WShape::ScaledV => {
                params.scale_m = Some(self.scale_m);
                Some(v.scale(self.scale_m))
            }
            WShape::Zero => Some(Polynomial::zero(n)),
        };
        if let Some(t) = self.prop.threshold() {
            if self.threshold_var {
                params.set_threshold(t, y[nv + nw]);
            }
        }
        Certificate { v, w, params }
    }

    fn sample_value(ob: &CompiledObligation, x: &[f64], ends: Option<&[(f64, Vec<f64>)]>) -> f64 {
        match &ob.kind {
            ObligationKind::Sign(s) => s.normalized().eval(x) - s.margin,
            ObligationKind::Stopped { v, margin, .. } => {
                let ends = ends.expect("stopped rows come with endpoints");
                let mean: f64 = ends.iter().map(|(p, y)| p * v.eval(y)).sum();
                v.eval(x) - mean - margin
            }
        }
    }

    /// One row per sample of each obligation, `samples[i]` belonging to
    /// obligation `i`, each asking for slack `slack`. Rows that do not
    /// depend on the coefficients are dropped when they hold and make the
    /// problem infeasible when they do not.
    pub fn build_lp(&self, samples: &[Vec<Vec<f64>>], slack: f64, coeff_bound: f64) -> LpProblem {
        let nvars = self.num_vars();
        let spec = self.compiler.spec();
        let tolerance = self.compiler.config().check.tolerance;
        let mut rows = Vec::new();
        for (i, ob) in self.base.iter().enumerate() {
            let stopped = match &ob.kind {
                ObligationKind::Stopped { k, .. } => Some(*k),
                ObligationKind::Sign(_) => None,
            };
            // Normalized polynomials, once per obligation.
            let polys: Option<(Polynomial, Vec<Polynomial>)> = match &ob.kind {
                ObligationKind::Sign(s) => Some((
                    s.normalized().add_constant(-s.margin),
                    self.units
                        .iter()
                        .map(|u| match &u[i].kind {
                            ObligationKind::Sign(su) => &su.normalized() - &s.normalized(),
                            ObligationKind::Stopped { .. } => unreachable!("obligation kinds are fixed"),
                        })
                        .collect(),
                )),
                ObligationKind::Stopped { .. } => None,
            };
            for x in samples.get(i).map(Vec::as_slice).unwrap_or(&[]) {
                let (constant, coeffs): (f64, Vec<f64>) = match (&polys, stopped) {
                    (Some((base, cols)), _) => (base.eval(x), cols.iter().map(|c| c.eval(x)).collect()),
                    (None, Some(k)) => {
                        if spec.xr().contains_point(x) {
                            continue;
                        }
                        let ends = stopped_endpoints(spec, x, k);
                        let c0 = Self::sample_value(ob, x, Some(&ends));
                        let cols = self
                            .units
                            .iter()
                            .map(|u| Self::sample_value(&u[i], x, Some(&ends)) - c0)
                            .collect();
                        (c0, cols)
                    }
                    (None, None) => unreachable!(),
                };
                let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                if scale < 1e-12 {
                    if constant < -tolerance {
                        rows.push(LpRow {
                            coeffs: vec![0.0; nvars],
                            rhs: -1.0,
                        });
                    }
                    continue;
                }
                // sum c_j y_j + constant >= slack
                rows.push(LpRow {
                    coeffs: coeffs.iter().map(|c| -c).collect(),
                    rhs: constant - slack,
                });
            }
        }
        let mut lower = vec![-coeff_bound; nvars];
        let mut upper = vec![coeff_bound; nvars];
        let mut objective = vec![0.0; nvars];
        if self.threshold_var {
            let t = nvars - 1;
            lower[t] = 0.0;
            upper[t] = 1.0;
            let raise = match (self.objective, self.prop.threshold()) {
                (Objective::Feasibility, _) => 0.0,
                // Lower bounds stated through eps' (P5, P13) improve as it falls.
                (Objective::MaximizeLower, Some(crate::certify::Threshold::Eps)) => 1.0,
                (Objective::MaximizeLower, _) => -1.0,
                (Objective::MinimizeUpper, _) => -1.0,
            };
            objective[t] = raise;
        }
        LpProblem {
            objective,
            rows,
            lower,
            upper,
        }
    }

    /// Grid and seeded random points of each obligation's region.
    pub fn initial_samples(&self, config: &SynthConfig) -> Vec<Vec<Vec<f64>>> {
        self.base
            .iter()
            .enumerate()
            .map(|(i, ob)| region_samples(ob.region(), config, i as u64))
            .collect()
    }
}

fn region_samples(region: &RegionSpec, config: &SynthConfig, stream: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    if region.is_empty() {
        return out;
    }
    let per = config.grid_per_dim.max(1);
    for b in &region.pieces {
        let n = b.dim();
        let total = (per as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
        if total > 4096 {
            push_unique(&mut out, b.center());
            for c in b.corners() {
                push_unique(&mut out, c);
            }
            continue;
        }
        for idx in 0..total {
            let mut rest = idx;
            let x: Vec<f64> = (0..n)
                .map(|d| {
                    let s = (rest % per as u64) as f64;
                    rest /= per as u64;
                    if per == 1 {
                        0.5 * (b.lo(d) + b.hi(d))
                    } else {
                        b.lo(d) + (b.hi(d) - b.lo(d)) * s / (per - 1) as f64
                    }
                })
                .collect();
            push_unique(&mut out, x);
        }
    }
    let mut rng = trial_rng(config.seed, stream);
    let unit = |rng: &mut rand_chacha::ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    for _ in 0..config.random_per_region {
        let piece = &region.pieces[(rng.next_u64() % region.pieces.len() as u64) as usize];
        let x: Vec<f64> = (0..piece.dim())
            .map(|d| piece.lo(d) + (piece.hi(d) - piece.lo(d)) * unit(&mut rng))
            .collect();
        push_unique(&mut out, x);
    }
    out
}

fn push_unique(set: &mut Vec<Vec<f64>>, x: Vec<f64>) -> bool {
    if set.iter().any(|y| y == &x) {
        return false;
    }
    set.push(x);
    true
}

/// Build the sampled LP of `prop` directly.
pub fn build_lp(
    prop: PropositionId,
    template: &TemplateSpec,
    spec: &ProblemSpec,
    samples: &[Vec<Vec<f64>>],
    config: &SynthConfig,
) -> Result<LpProblem> {
    let compiler = Compiler::new(spec, config.certify);
    let enc = TemplateEncoding::new(prop, template, &compiler)?;
    Ok(enc.build_lp(samples, config.slack, config.coeff_bound))
}

/// Counterexample-guided synthesis with the sequential checker.
pub fn synthesize_cegis(
    prop: PropositionId,
    template: &TemplateSpec,
    spec: &ProblemSpec,
    config: &SynthConfig,
) -> Result<SynthResult> {
    let compiler = Compiler::new(spec, config.certify);
    synthesize_with(
        prop,
        template,
        &compiler,
        config,
        &mut |c, p, cert| check_with(c, p, cert),
        &mut || false,
    )
}

/// Checker used to decide a candidate.
pub type CheckFn<'f> = dyn FnMut(&Compiler<'_>, PropositionId, &Certificate) -> Result<CertReport> + 'f;

/// Counterexample-guided synthesis. `check` decides candidates (it must be
/// a rigorous checker); `stop` is polled once per iteration and ends the
/// loop as `Unresolved` when it returns `true`.
pub fn synthesize_with(
    prop: PropositionId,
    template: &TemplateSpec,
    compiler: &Compiler<'_>,
    config: &SynthConfig,
    check: &mut CheckFn<'_>,
    stop: &mut dyn FnMut() -> bool,
) -> Result<SynthResult> {
    let enc = TemplateEncoding::new(prop, template, compiler)?;
    let mut samples = enc.initial_samples(config);
    let mut last: Option<(Certificate, CertReport)> = None;
    let count = |s: &[Vec<Vec<f64>>]| s.iter().map(Vec::len).sum::<usize>();
    let unresolved = |last: Option<(Certificate, CertReport)>, iterations, samples_used, reason: String| {
        let (certificate, report) = match last {
            Some((c, r)) => (Some(c), Some(r)),
            None => (None, None),
        };
        Ok(SynthResult {
            status: SynthStatus::Unresolved,
            certificate,
            report,
            iterations,
            samples_used,
            reason: Some(reason),
        })
    };
    for iteration in 1..=config.max_iterations {
        if stop() {
            return unresolved(last, iteration - 1, count(&samples), String::from("budget exhausted"));
        }
        let mut outcome = solve_lp(&enc.build_lp(&samples, config.slack, config.coeff_bound))?;
        if outcome == LpOutcome::Infeasible && config.slack > 0.0 {
            outcome = solve_lp(&enc.build_lp(&samples, 0.0, config.coeff_bound))?;
        }
        let values = match outcome {
            LpOutcome::Optimal { values, .. } => values,
            LpOutcome::Infeasible => {
                return Ok(SynthResult {
                    status: SynthStatus::Infeasible,
                    certificate: None,
                    report: None,
                    iterations: iteration,
                    samples_used: count(&samples),
                    reason: Some(String::from("sampled LP infeasible")),
                });
            }
            LpOutcome::Unbounded | LpOutcome::Stalled => {
                return unresolved(last, iteration, count(&samples), format!("LP solver: {outcome:?}"));
            }
        };
        let cert = enc.certificate(&values);
        let report = check(compiler, prop, &cert)?;
        if report.status() == Status::Proved {
            return Ok(SynthResult {
                status: SynthStatus::Certified,
                certificate: Some(cert),
                report: Some(report),
                iterations: iteration,
                samples_used: count(&samples),
                reason: None,
            });
        }
        let mut grew = false;
        for (i, result) in report.obligations.iter().enumerate() {
            match result.outcome.status {
                Status::Proved => {}
                Status::Disproved => {
                    if let Some(w) = &result.outcome.witness {
                        grew |= push_unique(&mut samples[i], w.point.clone());
                    }
                }
                Status::Unknown => {
                    for b in result.outcome.frontier.iter().take(config.frontier_samples) {
                        grew |= push_unique(&mut samples[i], b.center());
                    }
                    if let Some(w) = &result.outcome.witness {
                        grew |= push_unique(&mut samples[i], w.point.clone());
                    }
                }
            }
        }
        last = Some((cert, report));
        if !grew {
            return unresolved(last, iteration, count(&samples), String::from("no new counterexamples"));
        }
    }
    unresolved(
        last,
        config.max_iterations,
        count(&samples),
        String::from("iteration limit reached"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hyperbox;
    use crate::model::{Disturbance, Mode, ProblemParts, SystemModel};
    use crate::poly::parse_poly;
    use alloc::string::ToString;

    fn contraction() -> ProblemSpec {
        let model = SystemModel::new(1, 1, vec![parse_poly("0.5*x", &["x", "t"]).unwrap()]).unwrap();
        let r = |pieces: &[(f64, f64)]| {
            RegionSpec::new(1, pieces.iter().map(|b| Hyperbox::from_bounds(&[*b])).collect()).unwrap()
        };
        ProblemSpec::new(ProblemParts {
            state_vars: vec!["x".to_string()],
            dist_vars: vec!["t".to_string()],
            model,
            dist: Disturbance::point_mass(vec![0.0]),
            x: r(&[(-1.0, 1.0)]),
            x0: r(&[(-0.1, 0.1)]),
            xr: r(&[(-1.0, -0.9), (0.9, 1.0)]),
            xhat: None,
            mode: Mode::AssumedInvariant,
        })
        .unwrap()
    }

    #[test]
    fn basis_sizes() {
        let frame = Hyperbox::from_bounds(&[(0.0, 2.0)]);
        let b = template_basis(1, 2, &frame).unwrap();
        assert_eq!(b.len(), 3);
        // (x - 1)^2 at x = 3
        assert_eq!(b.iter().map(|p| p.eval(&[3.0])).collect::<Vec<_>>(), vec![1.0, 2.0, 4.0]);
        let frame = Hyperbox::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(template_basis(2, 3, &frame).unwrap().len(), 10);
        assert!(template_basis(1, MAX_TEMPLATE_DEGREE + 1, &frame).is_err());
    }

    #[test]
    fn rows_are_affine_in_the_coefficients() {
        let spec = contraction();
        let compiler = Compiler::new(&spec, CertifyConfig::default());
        let mut template = TemplateSpec::new(2);
        template.use_w = true;
        let enc = TemplateEncoding::new(PropositionId::P7, &template, &compiler).unwrap();
        let samples: Vec<Vec<Vec<f64>>> = enc
            .obligations()
            .iter()
            .map(|ob| {
                let b = ob.region().bounding_box().unwrap();
                (0..200)
                    .map(|i| vec![b.lo(0) + (b.hi(0) - b.lo(0)) * i as f64 / 199.0])
                    .collect()
            })
            .collect();
        let lp = enc.build_lp(&samples, 0.0, 1e4);
        assert_eq!(lp.rows.len(), 800);
        assert_eq!(lp.num_vars(), 3 + 3 + 1);
        // Homogeneous part: doubling the coefficients doubles it.
        let y: Vec<f64> = (0..lp.num_vars()).map(|i| 0.3 * i as f64 - 0.7).collect();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        for row in &lp.rows {
            let a: f64 = row.coeffs.iter().zip(&y).map(|(c, v)| c * v).sum();
            let b: f64 = row.coeffs.iter().zip(&y2).map(|(c, v)| c * v).sum();
            assert!((b - 2.0 * a).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn incompatible_objective() {
        let spec = contraction();
        let compiler = Compiler::new(&spec, CertifyConfig::default());
        let mut template = TemplateSpec::new(2);
        template.objective = Some(Objective::MaximizeLower);
        assert!(matches!(
            TemplateEncoding::new(PropositionId::P1, &template, &compiler),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn contraction_upper_bound() {
        let spec = contraction();
        let result = synthesize_cegis(PropositionId::P1, &TemplateSpec::new(2), &spec, &SynthConfig::default()).unwrap();
        assert_eq!(result.status, SynthStatus::Certified, "{:?}", result.reason);
        let report = result.report.unwrap();
        assert_eq!(report.status(), Status::Proved);
        let bound = report.bound.unwrap().value;
        assert!(bound <= 0.0124 + 1e-3, "{bound}");
    }
}
