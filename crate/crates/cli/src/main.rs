use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use outage_svm::datagen::ResilienceMode;
use outage_svm::report::OutputFormat;
use outage_svm::{Kernel, OutageError};

mod commands;

/// Hurricane outage prediction with an SMO-trained kernel SVM.
#[derive(Debug, Parser)]
#[command(name = "outage-svm", version)]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset as CSV.
    Generate(GenerateArgs),
    /// Cross-validate every kernel/penalty pair and report mean F1.
    Sweep(SweepArgs),
    /// Compare the SVM kernels and logistic regression on shared folds.
    Benchmark(BenchmarkArgs),
    /// Pooled cross-validation confusion matrix for one model.
    Confusion(ModelArgs),
    /// Train one model on a whole dataset and save it as JSON.
    Train(TrainArgs),
    /// Label CSV feature rows with a saved model.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of samples.
    #[arg(long)]
    count: Option<usize>,
    /// Share of samples labeled outage, in (0, 1).
    #[arg(long, value_name = "FRACTION")]
    outage_fraction: Option<f64>,
    /// How the resilience feature is produced.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    HazardModel,
}

impl From<ModeArg> for ResilienceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Direct => ResilienceMode::Direct,
            ModeArg::HazardModel => ResilienceMode::HazardModel,
        }
    }
}

/// Where the data comes from and how it is split.
#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset CSV; a dataset is generated from the config when omitted.
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    /// Seed for the generated dataset and the fold partition.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Output path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Kernel row; repeat for several (`linear`, `poly2`, `poly3`, `gaussian[:σ²]`).
    #[arg(long = "kernel", value_parser = parse_kernel)]
    kernels: Vec<Kernel>,
    /// Penalty column; repeat for several.
    #[arg(long = "c")]
    penalties: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    /// SVM kernel row; repeat for several.
    #[arg(long = "kernel", value_parser = parse_kernel)]
    kernels: Vec<Kernel>,
    /// Penalty shared by all SVM rows.
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Svm,
    Logreg,
}

/// Model family and hyperparameters. The SVM defaults to the configured
/// Gaussian kernel at the benchmark penalty.
#[derive(Debug, Args)]
struct ModelSelect {
    #[arg(long, value_enum, default_value = "svm")]
    method: MethodArg,
    /// SVM kernel (defaults to the configured Gaussian).
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<Kernel>,
    /// SVM penalty.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelSelect,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset CSV; a dataset is generated from the config when omitted.
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    /// Seed for the generated dataset.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelSelect,
    /// Model JSON path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model JSON written by `train`.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// CSV with a `resilience,distance,intensity` header (stdin when omitted).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    s.parse().map_err(|e: OutageError| e.to_string())
}

fn exit_code(e: &OutageError) -> u8 {
    match e {
        OutageError::Config(_) | OutageError::InvalidParameter(_) | OutageError::Toml(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
