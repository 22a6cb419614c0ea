//! `shift-audit` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod io;
mod manifest;

use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "shift-audit", version, about = "Support-sufficiency diagnostics for covariate shift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Divergences between a source and a target sample file.
    Diagnose(DiagnoseArgs),
    /// Itemized target-risk bound for a model.
    Bound(BoundArgs),
    /// Regenerate the tables for a built-in scenario.
    Replicate(ReplicateArgs),
    /// Fit a linear representation and logistic predictor.
    Train(TrainArgs),
    /// Risks of a model on an exact problem or labeled samples.
    Evaluate(EvaluateArgs),
    /// Sample a synthetic problem to CSV files.
    Generate(GenerateArgs),
    /// Recompute the digests recorded in a run manifest or report.
    CheckManifest {
        path: PathBuf,
        /// Directory that relative paths in the manifest resolve against.
        #[arg(long, default_value = ".")]
        base: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorKind {
    Kde,
    Hist,
}

/// Plug-in density options shared by commands that read samples.
#[derive(Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "kde")]
    estimator: EstimatorKind,
    /// Fixed KDE bandwidth; Silverman's rule when absent.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Histogram bins per axis.
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    source: PathBuf,
    target: PathBuf,
    /// Density level ε; overrides --eps-quantile.
    #[arg(long)]
    eps: Option<f64>,
    /// ε as this quantile of the source plug-in density over pooled samples.
    #[arg(long, default_value_t = 0.05)]
    eps_quantile: f64,
    #[arg(long, conflicts_with = "kernel_median")]
    kernel_sigma: Option<f64>,
    /// Median pairwise distance bandwidth (the default).
    #[arg(long)]
    kernel_median: bool,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TheoremId {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Model or hypothesis JSON.
    model: PathBuf,
    /// Labeled source samples.
    #[arg(long, requires = "target", conflicts_with = "problem")]
    source: Option<PathBuf>,
    #[arg(long, requires = "source")]
    target: Option<PathBuf>,
    /// Evaluate on an exact problem instead of samples.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, value_enum)]
    theorem: TheoremId,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Problem JSON with a known posterior, or `unobservable`.
    #[arg(long, default_value = "unobservable")]
    eta: String,
    #[arg(long, default_value_t = 1.0)]
    kernel_sigma: f64,
    /// RKHS norm bound for the kernel bound; defaults to the loss bound.
    #[arg(long)]
    lambda: Option<f64>,
    /// Threshold class range for the classical bound.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    class_lower: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    class_upper: f64,
    #[arg(long, default_value_t = 101)]
    class_cutoffs: usize,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scenario {
    Example1,
    Overlap,
    Labelshift,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(value_enum)]
    scenario: Scenario,
    #[arg(long)]
    out: PathBuf,
    /// First training seed (labelshift only).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds (labelshift only).
    #[arg(long, default_value_t = 2)]
    seeds: u64,
    /// Comma-separated values: ε for example1, σ for overlap, α for labelshift.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sweep: Vec<f64>,
    /// Kernel bandwidths for example1.
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    /// Class-1 clusters removed from the target, as `;`-separated lists, e.g. `none;1;1,3`.
    #[arg(long, default_value = "none;1;1,3;1,3,5")]
    removals: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyKind {
    Mmd,
    Hinge,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled source samples.
    source: PathBuf,
    /// Target samples; labels, if any, are ignored.
    target: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "mmd")]
    penalty: PenaltyKind,
    #[arg(long, default_value_t = 1.0)]
    kernel_sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    output_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Labeled target samples; refits the predictor on them with the
    /// representation frozen.
    #[arg(long)]
    tune_on_target: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    model: PathBuf,
    /// Exact source and target risks on this problem.
    #[arg(long, required_unless_present = "samples")]
    problem: Option<PathBuf>,
    /// Empirical risk on these labeled samples.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProblemKind {
    Example1,
    OverlapA,
    OverlapB,
    Clusters,
    Labelshift,
    RandomGrid,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    problem: ProblemKind,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Target sample size; defaults to --n.
    #[arg(long)]
    n_target: Option<usize>,
    /// Clusters removed from the target (labelshift).
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    remove: Vec<usize>,
    /// Generator seed (random-grid).
    #[arg(long, default_value_t = 0)]
    grid_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("SHIFT_AUDIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("SHIFT_AUDIT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Bound(a) => commands::bound(a),
        Command::Replicate(a) => commands::replicate(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Generate(a) => commands::generate(a),
        Command::CheckManifest { path, base } => commands::check_manifest(&path, &base),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
