use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "pomg",
    version,
    about = "Leader-follower POMG decision support: follower best response, policy evaluation and NSGA-II search"
)]
pub struct Cli {
    /// Upper bound on worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a model file, check every invariant and report its structure.
    Validate(ValidateArgs),
    /// Solve the follower's best response to a leader policy by value iteration.
    SolveFollower(SolveFollowerArgs),
    /// Compress the follower's best response into a policy on its own windows.
    ApproxFinite(ApproxFiniteArgs),
    /// Evaluate every criterion under a leader/follower policy pair.
    Evaluate(EvaluateArgs),
    /// Search for non-dominated leader policies with NSGA-II.
    Moga(MogaArgs),
    /// Score every deterministic leader policy and extract the exact Pareto set.
    Enumerate(EnumerateArgs),
    /// Value of the follower's information under garbled observation channels.
    Voi(VoiArgs),
    /// Build the attacker/defender scenario model from a parameter file.
    ScenarioBuild(ScenarioBuildArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct WindowFlags {
    /// Keep every sentinel-consistent window instead of only reachable ones.
    #[arg(long)]
    pub no_prune: bool,
    /// Largest window space accepted per agent.
    #[arg(long, default_value_t = 1_000_000)]
    pub window_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackupArg {
    Incremental,
    Enumerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckArg {
    Probes,
    Exact,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveFlags {
    /// Value-iteration accuracy ε.
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = BackupArg::Incremental)]
    pub backup: BackupArg,
    /// Candidate cap for `--backup enumerate`.
    #[arg(long, default_value_t = 5_000_000)]
    pub enumerate_cap: usize,
    /// How the stopping residual is measured.
    #[arg(long, value_enum, default_value_t = CheckArg::Probes)]
    pub check: CheckArg,
    /// Envelope tolerance used while pruning (default ε(1−β)/4).
    #[arg(long)]
    pub prune_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    Initial,
    Stationary,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalFlags {
    /// Largest window-pair count solved by dense LU.
    #[arg(long, default_value_t = 5_000)]
    pub direct_limit: usize,
    #[arg(long, default_value_t = 4_000_000)]
    pub max_pairs: usize,
    /// Accuracy target of the iterative evaluator.
    #[arg(long, default_value_t = 1e-10)]
    pub eval_tolerance: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    /// Distribution over window pairs that turns values into fitness.
    #[arg(long, value_enum, default_value_t = WeightingArg::Initial)]
    pub weighting: WeightingArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub windows: WindowFlags,
    /// Also write `report.json` and a manifest to this directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveFollowerArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Leader policy file (default: uniform over actions in every window).
    #[arg(long)]
    pub leader: Option<PathBuf>,
    #[command(flatten)]
    pub windows: WindowFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ApproxFiniteArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub leader: Option<PathBuf>,
    /// Gamma-set file from `solve-follower`; solved afresh when absent.
    #[arg(long)]
    pub gamma: Option<PathBuf>,
    #[command(flatten)]
    pub windows: WindowFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub leader: Option<PathBuf>,
    /// Follower policy file; the approximate best response is used when absent.
    #[arg(long)]
    pub follower: Option<PathBuf>,
    /// Number of random follower policies to test the response against.
    #[arg(long, default_value_t = 0)]
    pub alternatives: usize,
    /// Seed for `--alternatives`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub windows: WindowFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Deterministic,
    Stochastic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrowdingArg {
    Cuboid,
    MeanEuclidean,
}

#[derive(Debug, Args, Serialize)]
pub struct MogaArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Population size M (even).
    #[arg(long, default_value_t = 16)]
    pub population: usize,
    #[arg(long, default_value_t = 5)]
    pub generations: usize,
    /// Crossover probability.
    #[arg(long, default_value_t = 0.9)]
    pub crossover: f64,
    /// Per-window mutation probability (default 1/|W^L|).
    #[arg(long)]
    pub mutation: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Deterministic)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = CrowdingArg::Cuboid)]
    pub crowding: CrowdingArg,
    /// Continue from a checkpoint written by an earlier run; population
    /// settings come from the checkpoint, `--generations` may extend the run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Skip the search: score every deterministic leader policy (up to
    /// `--cap`) and report the exact Pareto set instead.
    #[arg(long, conflicts_with = "resume")]
    pub exhaustive: bool,
    /// Enumeration cap for `--exhaustive`.
    #[arg(long, default_value_t = 100_000)]
    pub cap: usize,
    #[command(flatten)]
    pub windows: WindowFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Refuse to enumerate more deterministic policies than this.
    #[arg(long, default_value_t = 100_000)]
    pub cap: usize,
    #[command(flatten)]
    pub windows: WindowFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VoiArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub leader: Option<PathBuf>,
    /// Garbling file (`{"matrix": ...}` or `{"per_action": ...}`); repeatable.
    #[arg(long)]
    pub garbling: Vec<PathBuf>,
    /// Number of random garblings to draw.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    /// Include the identity garbling as a control.
    #[arg(long)]
    pub identity: bool,
    /// Symmetric-noise garblings `(1−λ)I + λJ/n`; repeatable.
    #[arg(long)]
    pub noise: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub windows: WindowFlags,
    #[command(flatten)]
    pub solve: SolveFlags,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScenarioBuildArgs {
    /// Scenario parameter file (default: the built-in desk parameters).
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
