//! Command-line syntax.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochreach_core::certify::{CertifyConfig, Params, PropositionId};
use stochreach_core::regioncheck::CheckConfig;
use stochreach_core::synth::Objective;
use stochreach_core::Semantics;

#[derive(Debug, Parser)]
#[command(name = "stochreach", version, about = "Check, synthesize and test reachability-probability certificates")]
pub struct Cli {
    /// Worker threads (0 picks one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a certificate against one proposition's conditions.
    Check(CheckArgs),
    /// Search for a certificate by linear programming and counterexamples.
    Synthesize(SynthesizeArgs),
    /// Monte-Carlo estimates of the reach probability from X0.
    Simulate(SimulateArgs),
    /// Exact absorption probabilities for dynamics closed on a lattice.
    Oracle(OracleArgs),
    /// Check one certificate family under several propositions.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CheckerArgs {
    /// Bisection depth limit of the region checker.
    #[arg(long, default_value_t = CheckConfig::default().depth_limit)]
    pub depth: usize,
    /// Conservative tolerance of the region checker.
    #[arg(long, default_value_t = CheckConfig::default().tolerance)]
    pub margin: f64,
    /// Slack used for strict inequalities.
    #[arg(long, default_value_t = CertifyConfig::default().strict_margin)]
    pub strict_margin: f64,
    /// Boxes examined per obligation before giving up.
    #[arg(long, default_value_t = CheckConfig::default().max_boxes)]
    pub max_boxes: usize,
}

impl CheckerArgs {
    pub fn config(&self) -> CertifyConfig {
        CertifyConfig {
            check: CheckConfig {
                depth_limit: self.depth,
                tolerance: self.margin,
                max_boxes: self.max_boxes,
            },
            strict_margin: self.strict_margin,
        }
    }
}

/// Certificate parameters; each one given replaces the file's value.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha_tilde: Option<f64>,
    #[arg(long)]
    pub beta_tilde: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Horizon of the finite-time bounds.
    #[arg(long = "N", value_name = "N")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps_prime: Option<f64>,
    /// Scale of the pinned `w = M v`.
    #[arg(long = "M", value_name = "M")]
    pub scale_m: Option<f64>,
}

impl ParamArgs {
    pub fn apply(&self, params: &mut Params) {
        fn set<T: Copy>(slot: &mut Option<T>, v: Option<T>) {
            if v.is_some() {
                *slot = v;
            }
        }
        set(&mut params.k, self.k);
        set(&mut params.c, self.c);
        set(&mut params.delta, self.delta);
        set(&mut params.lambda, self.lambda);
        set(&mut params.alpha_tilde, self.alpha_tilde);
        set(&mut params.beta_tilde, self.beta_tilde);
        set(&mut params.alpha, self.alpha);
        set(&mut params.horizon, self.horizon);
        set(&mut params.eps, self.eps);
        set(&mut params.eps_prime, self.eps_prime);
        set(&mut params.scale_m, self.scale_m);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    ReachInvariant,
    ReachAvoid,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::ReachInvariant => Semantics::ReachInvariant,
            SemanticsArg::ReachAvoid => Semantics::ReachAvoid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    MaximizeLower,
    MinimizeUpper,
    Feasibility,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::MaximizeLower => Objective::MaximizeLower,
            ObjectiveArg::MinimizeUpper => Objective::MinimizeUpper,
            ObjectiveArg::Feasibility => Objective::Feasibility,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub certificate: PathBuf,
    /// Proposition to check; defaults to the certificate's.
    #[arg(long)]
    pub prop: Option<PropositionId>,
    #[command(flatten)]
    pub checker: CheckerArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Defaults to `synthesis.prop` of the problem file.
    #[arg(long)]
    pub prop: Option<PropositionId>,
    /// Total degree of `v` (default 4).
    #[arg(long)]
    pub degree_v: Option<u32>,
    /// Total degree of `w` (default: that of `v`).
    #[arg(long)]
    pub degree_w: Option<u32>,
    /// Give `w` free coefficients instead of pinning it.
    #[arg(long)]
    pub use_w: bool,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Seed of the random initial samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the best certificate here.
    #[arg(long)]
    pub certificate_out: Option<PathBuf>,
    #[command(flatten)]
    pub checker: CheckerArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Start point, comma separated. Without it a grid over X0 is used.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Grid points per dimension of every X0 box.
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Defaults to reach-avoid in xhat mode and reach-invariant otherwise.
    #[arg(long, value_enum)]
    pub semantics: Option<SemanticsArg>,
    /// Write per-trial outcomes as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Lattice step per dimension; defaults to the problem's `lattice`.
    #[arg(long, value_delimiter = ',')]
    pub step: Option<Vec<f64>>,
    /// Lattice origin; defaults to the problem's, or zero.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub origin: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub semantics: Option<SemanticsArg>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub certificate: PathBuf,
    /// Comma-separated propositions; may be empty.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub props: Vec<String>,
    #[command(flatten)]
    pub checker: CheckerArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

/// Flags whose values only decide where output goes or how many threads run.
const RUNTIME_FLAGS: [&str; 5] = ["--threads", "--output", "-o", "--csv", "--certificate-out"];

/// `argv` without the program name and the runtime-only flags.
pub fn echo(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if RUNTIME_FLAGS.contains(&a.as_str()) {
            it.next();
            continue;
        }
        if RUNTIME_FLAGS.iter().any(|f| f.starts_with("--") && a.starts_with(&format!("{f}="))) {
            continue;
        }
        out.push(a.clone());
    }
    out
}
