mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

/// Residual vector quantization: training, encoding and recall evaluation.
#[derive(Debug, Parser)]
#[command(name = "irvq", version, about)]
pub struct Cli {
    /// TOML file with default values; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a vector file into a training set and a base set.
    Split(SplitArgs),
    /// Compute exact nearest neighbors of queries in a base set.
    Gt(GtArgs),
    /// Train stage codebooks and write an RVQC file.
    Train(TrainArgs),
    /// Encode vectors with trained codebooks and write an RVQE file.
    Encode(EncodeArgs),
    /// Search an encoded database and report recall@R.
    Eval(EvalArgs),
    /// Report per-stage distortion, code entropy and mutual information.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rvq,
    Irvq,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Input fvecs or bvecs file.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of rows drawn into the training set.
    #[arg(long)]
    pub train_n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub base_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GtArgs {
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// Neighbors stored per query.
    #[arg(long)]
    pub k: Option<usize>,
    /// Output ivecs file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training vectors (fvecs or bvecs).
    #[arg(long)]
    pub data: PathBuf,
    /// Output RVQC file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Number of stages.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Codewords per stage (at most 256).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Length of the PCA dimension schedule.
    #[arg(long = "I")]
    pub i: Option<usize>,
    /// Beam width used while training.
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// k-means iterations for each schedule round before the last.
    #[arg(long)]
    pub round_iters: Option<usize>,
    /// k-means iterations for the full-dimensional round.
    #[arg(long)]
    pub final_iters: Option<usize>,
    /// Relative distortion change that stops k-means.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// RVQC codebook file.
    #[arg(long)]
    pub codebooks: PathBuf,
    /// Vectors to encode.
    #[arg(long)]
    pub data: PathBuf,
    /// Output RVQE file.
    #[arg(long)]
    pub out: PathBuf,
    /// Beam width.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Bits per stored cross term (0 keeps it exact).
    #[arg(long)]
    pub epsilon_bits: Option<u8>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub codebooks: PathBuf,
    /// RVQE file of the base set.
    #[arg(long)]
    pub encoded: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// Ground truth ivecs file.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Original base vectors; used for ground truth when `--gt` is absent and for distortion.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Comma-separated recall depths.
    #[arg(long = "R", value_delimiter = ',')]
    pub r: Option<Vec<usize>>,
    /// Re-quantize the stored cross terms to this many bits before searching.
    #[arg(long)]
    pub epsilon_bits: Option<u8>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[arg(long)]
    pub codebooks: PathBuf,
    /// Original vectors.
    #[arg(long)]
    pub data: PathBuf,
    /// Codes of `--data`; encoded on the fly when absent.
    #[arg(long)]
    pub encoded: Option<PathBuf>,
    /// Beam width for on-the-fly encoding.
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
