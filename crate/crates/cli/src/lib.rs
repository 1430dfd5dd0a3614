//! `shapereg` command-line tool: fitting, prediction, monotonization, synthetic
//! data and grid export.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 invalid configuration,
//! 3 non-convergence (the model is still written) or numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod synth;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "shapereg", version, about = "Shape-constrained polynomial regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a dataset and write it as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model at the points of a CSV file.
    Predict(PredictArgs),
    /// Sample a model on a tensor grid and project onto the monotone cone.
    Project(ProjectArgs),
    /// Sort the values of a 1D model or grid (monotone rearrangement).
    Rearrange(RearrangeArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Tabulate predictions and constrained derivatives on a tensor grid.
    EvalGrid(EvalGridArgs),
    /// Fit a range of degrees and tabulate status and training RMSE.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Least squares under the shape constraints (adaptive discretization).
    Constrained,
    /// Unconstrained minimum-norm least squares.
    Poly,
    /// Unconstrained ridge regression.
    Ridge,
    /// Gaussian-process regression, RBF kernel with fitted length scales.
    Gpr,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitSettings {
    /// Total polynomial degree.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Constraint list, e.g. `+1,-1,0,+1` or `+1,c1` (directions are 1-based).
    #[arg(long, allow_hyphen_values = true)]
    pub constraints: Option<String>,
    /// Initial constraint grid values per direction.
    #[arg(long)]
    pub init_grid: Option<usize>,
    /// Reference grid values per direction.
    #[arg(long)]
    pub ref_grid: Option<usize>,
    /// Multistart restarts for the worst-violation search (default 100 per input).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Outer iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Raw-unit violation tolerances, one per constraint entry (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub epsilon: Option<Vec<f64>>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Ridge penalty (scaled coordinates) for `--method ridge`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub settings: FitSettings,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with columns `x1..xd` and optionally `target`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV; defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    /// Model or grid file.
    #[arg(long)]
    pub model: PathBuf,
    /// Monotonicity signature; defaults to the constraints stored in the model.
    #[arg(long, allow_hyphen_values = true)]
    pub constraints: Option<String>,
    /// Grid values per direction (default 80 for one input, 40 otherwise).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Dataset on which to report the RMSE of the grid-constant result.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RearrangeArgs {
    /// One-dimensional model or grid file.
    #[arg(long)]
    pub model: PathBuf,
    /// `+1` for increasing, `-1` for decreasing.
    #[arg(long, default_value = "+1", allow_hyphen_values = true)]
    pub sign: String,
    /// Grid size when sampling a model (default 80).
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// glass2d, press4d, mono-poly or sigmoid1d.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub size: Option<usize>,
    /// Standard deviation of additive normal noise (target units).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Amplitude of a localized bump that breaks monotonicity.
    #[arg(long, allow_hyphen_values = true)]
    pub bump: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalGridArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Grid values per direction.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Derivative columns to emit; defaults to the constraints stored in the model.
    #[arg(long, allow_hyphen_values = true)]
    pub constraints: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Degrees to try, e.g. `2,3,4` or `2..6` (inclusive).
    #[arg(long)]
    pub degrees: String,
    /// Optional CSV copy of the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub settings: FitSettings,
}

/// Runs one command, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => commands::fit(&a, stdout),
        Command::Predict(a) => commands::predict(&a, stdout),
        Command::Project(a) => commands::project(&a, stdout),
        Command::Rearrange(a) => commands::rearrange(&a, stdout),
        Command::Synth(a) => commands::synth(&a, stdout),
        Command::EvalGrid(a) => commands::eval_grid(&a, stdout),
        Command::Sweep(a) => commands::sweep(&a, stdout),
    }
}
