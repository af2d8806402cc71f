//! Subcommand implementations. Each returns its result and exit code; the
//! caller wraps them into a report.

use std::path::Path;

use rayon::prelude::*;
use stochreach_core::certify::{
    assemble_report, bound_kind, check_obligation, embed_supermartingale, embed_zero_w, embedding_supremum,
    BoundKind, CertReport, Certificate, Compiler, Params, PropositionId,
};
use stochreach_core::regioncheck::Status;
use stochreach_core::sim::{exact_chain_probability, Lattice, Outcome, TrialConfig};
use stochreach_core::synth::{synthesize_with, SynthConfig, SynthStatus, TemplateSpec};
use stochreach_core::{Mode, ProblemSpec, RegionSpec, Semantics};

use crate::args::{CheckArgs, CompareArgs, OracleArgs, SimulateArgs, SynthesizeArgs};
use crate::estimate::{count, simulate_all, ProbabilityEstimate, DEFAULT_CONFIDENCE};
use crate::format::{load_certificate, load_problem, CertificateFile, LoadedProblem};
use crate::report::{
    trim_report, CheckResult, CommandResult, CompareResult, CompareRow, InputFile, LatticeValue, OracleResult,
    SimulateResult, StartEstimate, SynthRun, SynthesizeResult,
};
use crate::{exit, CliError};

/// Default template degree of `synthesize`.
pub const DEFAULT_DEGREE: u32 = 4;
/// Horizon used for the finite-time bounds when none is given.
pub const DEFAULT_BOUND_HORIZON: usize = 10;

pub struct CommandOutput {
    pub inputs: Vec<InputFile>,
    pub result: CommandResult,
    pub exit_code: i32,
}

fn problem_input(p: &LoadedProblem) -> InputFile {
    InputFile {
        role: "problem".to_string(),
        path: p.path.display().to_string(),
        sha256: p.sha256.clone(),
    }
}

pub fn status_exit_code(status: Status) -> i32 {
    match status {
        Status::Proved => exit::PROVED,
        Status::Disproved => exit::DISPROVED,
        Status::Unknown => exit::UNKNOWN,
    }
}

/// Compile `cert` for `prop` and decide the obligations concurrently.
pub fn check_parallel(compiler: &Compiler<'_>, prop: PropositionId, cert: &Certificate) -> stochreach_core::Result<CertReport> {
    let obligations = compiler.compile(prop, cert)?;
    let outcomes = obligations
        .par_iter()
        .map(|ob| check_obligation(compiler.spec(), ob, &compiler.config().check))
        .collect::<stochreach_core::Result<Vec<_>>>()?;
    assemble_report(prop, cert, compiler, &obligations, outcomes)
}

pub fn check(args: &CheckArgs) -> Result<CommandOutput, CliError> {
    let problem = load_problem(&args.problem)?;
    let loaded = load_certificate(&args.certificate, &problem.spec)?;
    let prop = args.prop.unwrap_or(loaded.file.prop);
    let mut cert = loaded.certificate;
    args.params.apply(&mut cert.params);
    let compiler = Compiler::new(&problem.spec, args.checker.config());
    let report = trim_report(check_parallel(&compiler, prop, &cert)?);
    let status = report.status();
    Ok(CommandOutput {
        inputs: vec![
            problem_input(&problem),
            InputFile {
                role: "certificate".to_string(),
                path: loaded.path.display().to_string(),
                sha256: loaded.sha256,
            },
        ],
        result: CommandResult::Check(CheckResult {
            prop,
            status,
            bound: report.bound,
            report,
        }),
        exit_code: status_exit_code(status),
    })
}

/// Parameter combinations tried by `synthesize`: every parameter the
/// proposition needs and `fixed` leaves open is swept over a small grid.
pub fn sweep_grid(prop: PropositionId, fixed: &Params) -> Vec<Params> {
    use PropositionId::*;
    const K: [usize; 3] = [1, 2, 3];
    const C: [f64; 3] = [0.0, 0.01, 0.05];
    const LAMBDA: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
    const ALPHA_TILDE: [f64; 4] = [0.5, 0.9, 0.99, 1.0];
    const BETA_TILDE: [f64; 2] = [0.0, 0.01];
    const ALPHA: [f64; 3] = [0.5, 0.9, 0.99];
    const LEVEL: [f64; 3] = [0.5, 1.0, 2.0];

    let mut out = vec![fixed.clone()];
    let mut sweep = |get: fn(&mut Params) -> &mut Option<f64>, grid: &[f64]| {
        let mut next = Vec::new();
        for p in &out {
            let mut p = p.clone();
            if get(&mut p).is_some() {
                next.push(p);
                continue;
            }
            for v in grid {
                *get(&mut p) = Some(*v);
                next.push(p.clone());
            }
        }
        out = next;
    };
    match prop {
        P3 => sweep(|p| &mut p.c, &LEVEL),
        P4 | P5 | P14 | P15 => sweep(|p| &mut p.c, &C),
        P9 | P10 => sweep(|p| &mut p.lambda, &LAMBDA),
        P11 => {
            sweep(|p| &mut p.alpha_tilde, &ALPHA_TILDE);
            sweep(|p| &mut p.beta_tilde, &BETA_TILDE);
        }
        P12 => {
            sweep(|p| &mut p.alpha_tilde, &ALPHA_TILDE[..3]);
            sweep(|p| &mut p.beta_tilde, &BETA_TILDE);
        }
        P14Alpha => sweep(|p| &mut p.alpha, &ALPHA),
        _ => {}
    }
    if matches!(prop, P4 | P5 | P13 | P14 | P14Alpha | P15) && fixed.k.is_none() {
        out = out
            .into_iter()
            .flat_map(|p| {
                K.iter().map(move |k| Params {
                    k: Some(*k),
                    ..p.clone()
                })
            })
            .collect();
    }
    if matches!(prop, P10 | P11 | P12) {
        for p in &mut out {
            p.horizon.get_or_insert(DEFAULT_BOUND_HORIZON);
        }
    }
    out
}

fn better(prop: PropositionId, candidate: f64, incumbent: f64) -> bool {
    match bound_kind(prop) {
        BoundKind::Lower => candidate > incumbent,
        BoundKind::Upper => candidate < incumbent,
        BoundKind::AlmostSure => false,
    }
}

pub fn synthesize(args: &SynthesizeArgs) -> Result<CommandOutput, CliError> {
    let problem = load_problem(&args.problem)?;
    let section = problem.file.synthesis.clone().unwrap_or_default();
    let prop = args
        .prop
        .or(section.prop)
        .ok_or_else(|| CliError::Usage("no proposition: pass --prop or set synthesis.prop".to_string()))?;
    let mut fixed = section.params.clone();
    args.params.apply(&mut fixed);
    let degree_v = args.degree_v.or(section.degree_v).unwrap_or(DEFAULT_DEGREE);
    let degree_w = args.degree_w.or(section.degree_w).unwrap_or(degree_v);
    let use_w = args.use_w || section.use_w.unwrap_or(false);
    let objective = args.objective.map(Into::into).or(section.objective);
    let mut config = SynthConfig {
        certify: args.checker.config(),
        seed: args.seed,
        ..SynthConfig::default()
    };
    if let Some(m) = args.max_iterations.or(section.max_iterations) {
        config.max_iterations = m;
    }
    let compiler = Compiler::new(&problem.spec, config.certify);
    let grid = sweep_grid(prop, &fixed);
    let results = grid
        .par_iter()
        .map(|params| {
            let template = TemplateSpec {
                degree_v,
                degree_w,
                use_w,
                fixed_params: params.clone(),
                objective,
            };
            synthesize_with(
                prop,
                &template,
                &compiler,
                &config,
                &mut |c, p, cert| check_parallel(c, p, cert),
                &mut || false,
            )
        })
        .collect::<stochreach_core::Result<Vec<_>>>()?;

    let mut best: Option<usize> = None;
    let mut runs = Vec::with_capacity(results.len());
    for (i, (params, r)) in grid.iter().zip(&results).enumerate() {
        let bound = r.report.as_ref().and_then(|rep| rep.bound);
        if r.status == SynthStatus::Certified {
            let value = bound.map_or(f64::NAN, |b| b.value);
            let replace = match best {
                None => true,
                Some(j) => better(prop, value, results[j].report.as_ref().and_then(|r| r.bound).map_or(f64::NAN, |b| b.value)),
            };
            if replace {
                best = Some(i);
            }
        }
        runs.push(SynthRun {
            params: params.clone(),
            status: r.status,
            bound,
            iterations: r.iterations,
            samples_used: r.samples_used,
            reason: r.reason.clone(),
        });
    }
    let status = match best {
        Some(_) => SynthStatus::Certified,
        None if results.iter().all(|r| r.status == SynthStatus::Infeasible) => SynthStatus::Infeasible,
        None => SynthStatus::Unresolved,
    };
    let (certificate, report) = match best {
        Some(i) => {
            let r = &results[i];
            let cert = r.certificate.as_ref().ok_or_else(|| CliError::Internal("certified run without certificate".to_string()))?;
            (
                Some(CertificateFile::from_certificate(prop, cert, &problem.spec)),
                r.report.clone().map(trim_report),
            )
        }
        None => (None, None),
    };
    if let (Some(path), Some(cert)) = (&args.certificate_out, &certificate) {
        crate::format::write_json(path, cert)?;
    }
    Ok(CommandOutput {
        inputs: vec![problem_input(&problem)],
        result: CommandResult::Synthesize(Box::new(SynthesizeResult {
            prop,
            status,
            degree_v,
            degree_w,
            use_w,
            runs,
            best,
            certificate,
            report,
        })),
        exit_code: if status == SynthStatus::Certified {
            exit::PROVED
        } else {
            exit::UNKNOWN
        },
    })
}

/// `per_dim` evenly spaced points per dimension of every box, deduplicated,
/// in box order.
pub fn grid_points(region: &RegionSpec, per_dim: usize) -> Vec<Vec<f64>> {
    let per_dim = per_dim.max(1);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for b in &region.pieces {
        let axes: Vec<Vec<f64>> = b
            .intervals
            .iter()
            .map(|iv| {
                if per_dim == 1 || iv.lo == iv.hi {
                    vec![iv.lo + (iv.hi - iv.lo) * 0.5]
                } else {
                    (0..per_dim)
                        .map(|i| iv.lo + (iv.hi - iv.lo) * (i as f64 / (per_dim - 1) as f64))
                        .collect()
                }
            })
            .collect();
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p: Vec<f64>| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        for p in points {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn default_semantics(spec: &ProblemSpec) -> Semantics {
    match spec.mode() {
        Mode::AssumedInvariant => Semantics::ReachInvariant,
        Mode::Xhat => Semantics::ReachAvoid,
    }
}

fn write_csv(path: &Path, runs: &[(Vec<f64>, Vec<Outcome>)]) -> Result<(), CliError> {
    let write_err = |e: csv::Error| CliError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_path(path).map_err(write_err)?;
    w.write_record(["start", "x0", "trial", "outcome", "step"]).map_err(write_err)?;
    for (s, (x0, outcomes)) in runs.iter().enumerate() {
        let x0 = x0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        for (t, o) in outcomes.iter().enumerate() {
            let (kind, step) = match o {
                Outcome::Hit(k) => ("hit", k.to_string()),
                Outcome::Exit(k) => ("exit", k.to_string()),
                Outcome::Censored => ("censored", String::new()),
            };
            w.write_record([s.to_string(), x0.clone(), t.to_string(), kind.to_string(), step])
                .map_err(write_err)?;
        }
    }
    w.flush().map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<CommandOutput, CliError> {
    let problem = load_problem(&args.problem)?;
    let spec = &problem.spec;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".to_string()));
    }
    let starts = match &args.x0 {
        Some(x) => vec![x.clone()],
        None => grid_points(spec.x0(), args.grid),
    };
    let config = TrialConfig {
        seed: args.seed,
        horizon: args.horizon,
        trials: args.trials,
        semantics: args.semantics.map_or_else(|| default_semantics(spec), Into::into),
    };
    let mut runs = Vec::with_capacity(starts.len());
    let mut estimates = Vec::with_capacity(starts.len());
    for x0 in starts {
        let outcomes = simulate_all(spec, &x0, &config)?;
        let estimate = ProbabilityEstimate::from_counts(&count(&outcomes), config.horizon, config.semantics, DEFAULT_CONFIDENCE);
        if !estimate.is_consistent() {
            return Err(CliError::Internal(format!("inconsistent estimate {estimate:?}")));
        }
        estimates.push(StartEstimate { x0: x0.clone(), estimate });
        if args.csv.is_some() {
            runs.push((x0, outcomes));
        }
    }
    if let Some(path) = &args.csv {
        write_csv(path, &runs)?;
    }
    Ok(CommandOutput {
        inputs: vec![problem_input(&problem)],
        result: CommandResult::Simulate(SimulateResult {
            seed: config.seed,
            horizon: config.horizon,
            trials: config.trials,
            semantics: config.semantics,
            estimates,
        }),
        exit_code: exit::PROVED,
    })
}

pub fn oracle(args: &OracleArgs) -> Result<CommandOutput, CliError> {
    let problem = load_problem(&args.problem)?;
    let spec = &problem.spec;
    let n = spec.state_dim();
    let from_file = problem.file.lattice.clone();
    let step = args
        .step
        .clone()
        .or_else(|| from_file.as_ref().map(|l| l.step.clone()))
        .ok_or_else(|| CliError::Usage("no lattice: pass --step or set lattice in the problem file".to_string()))?;
    let origin = args
        .origin
        .clone()
        .or_else(|| from_file.as_ref().map(|l| l.origin.clone()))
        .unwrap_or_else(|| vec![0.0; n]);
    let lattice = Lattice { origin, step };
    let semantics = args.semantics.map_or_else(|| default_semantics(spec), Into::into);
    let solution = exact_chain_probability(spec, &lattice, semantics)?;
    let states: Vec<LatticeValue> = solution
        .states
        .iter()
        .zip(&solution.probs)
        .map(|(x, p)| LatticeValue {
            x: x.clone(),
            probability: *p,
        })
        .collect();
    let starts = states.iter().filter(|s| spec.x0().contains_point(&s.x)).cloned().collect();
    Ok(CommandOutput {
        inputs: vec![problem_input(&problem)],
        result: CommandResult::Oracle(OracleResult {
            lattice,
            semantics,
            direct: solution.direct,
            starts,
            states,
        }),
        exit_code: exit::PROVED,
    })
}

/// The certificate `target` is checked with, derived from one for `source`.
pub fn derive_certificate(
    source: PropositionId,
    target: PropositionId,
    cert: &Certificate,
    spec: &ProblemSpec,
    compiler: &Compiler<'_>,
) -> stochreach_core::Result<(Certificate, &'static str)> {
    use PropositionId::*;
    match (source, target) {
        (P1, P7) => Ok((embed_zero_w(cert, spec, &compiler.config().check)?, "embed_zero_w")),
        (P2, P6 | P6Xhat) => {
            let sup = embedding_supremum(cert, spec, &compiler.config().check)?;
            Ok((embed_supermartingale(cert, sup)?, "embed_supermartingale"))
        }
        _ => Ok((cert.clone(), "unchanged")),
    }
}

pub fn compare(args: &CompareArgs) -> Result<CommandOutput, CliError> {
    let problem = load_problem(&args.problem)?;
    let spec = &problem.spec;
    let loaded = load_certificate(&args.certificate, spec)?;
    let props = args
        .props
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<PropositionId>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cert = loaded.certificate.clone();
    args.params.apply(&mut cert.params);
    let source = loaded.file.prop;
    let compiler = Compiler::new(spec, args.checker.config());
    let rows: Vec<CompareRow> = props
        .iter()
        .map(|&prop| {
            let attempt = derive_certificate(source, prop, &cert, spec, &compiler)
                .and_then(|(c, via)| check_parallel(&compiler, prop, &c).map(|r| (r, via)));
            match attempt {
                Ok((report, via)) => CompareRow {
                    prop,
                    derived_via: via.to_string(),
                    status: Some(report.status()),
                    bound: report.bound,
                    error: None,
                },
                Err(e) => CompareRow {
                    prop,
                    derived_via: String::new(),
                    status: None,
                    bound: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let exit_code = if rows.iter().any(|r| r.status == Some(Status::Disproved)) {
        exit::DISPROVED
    } else if rows.iter().all(|r| r.status == Some(Status::Proved)) {
        exit::PROVED
    } else {
        exit::UNKNOWN
    };
    Ok(CommandOutput {
        inputs: vec![
            problem_input(&problem),
            InputFile {
                role: "certificate".to_string(),
                path: loaded.path.display().to_string(),
                sha256: loaded.sha256,
            },
        ],
        result: CommandResult::Compare(CompareResult { source_prop: source, rows }),
        exit_code,
    })
}
