//! `pdsvm`: train, apply and cross-validate sparse SVMs from CSV files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdsvm::simdata::SimFamily;
use pdsvm::{LabelColumn, SolverKind, TransformKind};

#[derive(Parser, Debug)]
#[command(name = "pdsvm", version, about = "Sparse SVMs via proximal distance algorithms")]
pub struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, env = "PDSVM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model and write it as JSON; fit reports go to standard output.
    Train(TrainArgs),
    /// Predict class labels for a CSV file with a saved model.
    Predict(PredictArgs),
    /// Cross-validate along a grid of sparsity levels.
    Cv(CvArgs),
    /// Generate a simulated dataset plus a JSON sidecar.
    Gen(GenArgs),
    /// Fit once and write the per-outer-iteration trace.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Gaussian,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: PathBuf,

    /// Label column, by header name or 0-based index.
    #[arg(long, default_value = "label")]
    pub label_column: LabelColumn,

    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    #[arg(long, default_value = "mm", value_parser = parse_solver)]
    pub algorithm: SolverKind,

    /// Target sparsity s in [0, 1): the fraction of coefficients forced to zero.
    #[arg(long)]
    pub sparsity: Option<f64>,

    /// Number of nonzero feature coefficients; wins over --sparsity.
    #[arg(long)]
    pub k: Option<usize>,

    /// Fit in a kernel feature space; sparsity then limits retained samples.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,

    /// Gaussian bandwidth; defaults to the median heuristic.
    #[arg(long, requires = "kernel")]
    pub gamma: Option<f64>,

    #[arg(long, default_value = "none", value_parser = parse_transform)]
    pub transform: TransformKind,

    /// Initial penalty.
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,

    /// Penalty multiplier per outer iteration.
    #[arg(long, default_value_t = 1.2)]
    pub multiplier: f64,

    /// Maximum outer iterations.
    #[arg(long, default_value_t = 100)]
    pub outer: usize,

    /// Maximum inner iterations per penalty level.
    #[arg(long, default_value_t = 10_000)]
    pub inner: usize,

    /// Inner stopping tolerance on the squared gradient norm.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,

    /// Distance tolerance of the outer loop.
    #[arg(long, default_value_t = 1e-6)]
    pub dist_tol: f64,

    /// Disable Nesterov acceleration.
    #[arg(long)]
    pub no_accel: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Format of the fit reports.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Report wall time instead of NA.
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Input CSV file; a label column, when present, is used to report accuracy.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column to skip and score against, by name or 0-based index.
    #[arg(long)]
    pub label_column: Option<LabelColumn>,
    #[arg(long)]
    pub no_header: bool,
    /// Output CSV of predictions; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Held-out test CSV; otherwise a stratified split of --data is held out.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// Fraction of --data held out for testing when --test-data is absent.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Comma-separated sparsity levels in ascending order.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,0.9,0.95,0.99")]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Fill the Time column with wall-clock seconds.
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: SimFamily,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub p: usize,
    /// Causal features (gaussian_causal only).
    #[arg(long, default_value_t = 5)]
    pub k0: usize,
    /// Spiral class sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [600, 300, 100])]
    pub counts: Vec<usize>,
    /// Spiral noise standard deviations.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|_| format!("expected mm or sd, got {s:?}"))
}

fn parse_transform(s: &str) -> Result<TransformKind, String> {
    s.parse().map_err(|e: pdsvm::Error| e.to_string())
}

fn parse_family(s: &str) -> Result<SimFamily, String> {
    s.parse().map_err(|e: pdsvm::Error| e.to_string())
}

/// The error chain joined by ": ", skipping causes that the previous
/// message already spells out.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !last.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        last = msg;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::FAILURE
        }
    }
}
