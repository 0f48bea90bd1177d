//! `msve`: spectral variance estimation for Monte Carlo output and VAR(1)
//! replication studies.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "msve", version, about = "Multivariate spectral variance estimation for Monte Carlo output")]
pub struct Cli {
    /// Base seed; overrides any seed in --config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate Σ, confidence regions and ESS for a chain file.
    Estimate(EstimateArgs),
    /// Simulate a VAR(1) chain.
    Simulate(SimulateArgs),
    /// Relative estimation error over replications and sample sizes.
    Sweep(ExperimentArgs),
    /// Coverage and volume of confidence regions for the VAR(1) mean.
    Coverage(ExperimentArgs),
    /// Per-replication largest eigenvalue of the estimate.
    Eigdist(ExperimentArgs),
    /// Consistency diagnostics and summation identities for a lag window.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Chain file: CSV or raw little-endian f64 with an MCOV header.
    pub chain: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    pub input_format: Option<String>,
    /// Rows to drop from the start of the chain.
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
    #[arg(long, default_value = "bartlett")]
    pub window: String,
    /// Truncation exponent: b_n = floor(n^nu).
    #[arg(long, conflicts_with = "bn")]
    pub nu: Option<f64>,
    /// Explicit truncation point.
    #[arg(long)]
    pub bn: Option<usize>,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Also write auto/cross-correlations up to this lag (acf.csv).
    #[arg(long)]
    pub acf: Option<usize>,
    /// Also write the lag autocovariances used by the estimate (autocov.csv).
    #[arg(long)]
    pub autocov: bool,
}

#[derive(Args, Debug)]
pub struct ProcessArgs {
    /// Built-in VAR(1) setting 1..6.
    #[arg(long, conflicts_with = "spec")]
    pub setting: Option<u8>,
    /// JSON VAR(1) specification: {"phi": matrix | diagonal list, "w": matrix | {"ar1": {"rho": r}}}.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long)]
    pub n: usize,
    /// RNG stream index.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// csv or raw.
    #[arg(long, default_value = "csv")]
    pub chain_format: String,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Comma-separated window specs, separated by ';' (e.g. "bartlett;tukey-hanning").
    #[arg(long)]
    pub windows: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sample_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Simulate a fresh chain per sample size instead of nested prefixes.
    #[arg(long)]
    pub independent_samples: bool,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[arg(long, default_value = "bartlett")]
    pub window: String,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub nu: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000, 1_000_000, 10_000_000])]
    pub n_grid: Vec<usize>,
    /// Strong-invariance exponent λ; enables the ψ(n) = n^{1/2−λ} terms.
    #[arg(long)]
    pub psi_lambda: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
