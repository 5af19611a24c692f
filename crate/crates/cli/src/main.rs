use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use llt_core::LltError;

mod commands;

/// Linear-law feature transformation and ECG beat classification.
///
/// Beat CSV files hold one beat per line: a label token (N, E or ?), an
/// optional `*` marking an artifact beat, then the samples. Raw record files
/// (`--raw`) hold one record per line as `[label;]fs;v0,v1,...`.
#[derive(Debug, Parser)]
#[command(name = "llt", version, propagate_version = true)]
pub struct Cli {
    /// Run configuration file (key=value lines). Flags override its values.
    #[arg(long, global = true, env = "LLT_CONFIG")]
    pub config: Option<PathBuf>,

    /// Override one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a two-class synthetic corpus as train/validation/test CSV files.
    Synth(SynthArgs),
    /// Filter raw records, detect peaks and cut beat windows.
    Preprocess(PreprocessArgs),
    /// Fit the linear law of one class.
    FitLaw(FitLawArgs),
    /// Compare law lengths by the train/validation residual variance gap.
    ScanLawLength(ScanArgs),
    /// Turn beats into law-residual feature vectors.
    Transform(TransformArgs),
    /// Train a classifier on feature vectors.
    Train(TrainArgs),
    /// Score a law and model on a labeled test set.
    Evaluate(EvaluateArgs),
    /// Run the full protocol on a data directory and write a comparison report.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// Low-pass cutoff in Hz.
    #[arg(long)]
    pub lowpass: Option<f64>,
    /// High-pass cutoff in Hz.
    #[arg(long)]
    pub highpass: Option<f64>,
    /// Beat window length in samples.
    #[arg(long)]
    pub window_len: Option<usize>,
    /// Sampling rate for records that do not state their own.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Peak threshold as a fraction of the record maximum.
    #[arg(long)]
    pub peak_threshold: Option<f64>,
    /// Minimum spacing between peaks in milliseconds.
    #[arg(long)]
    pub refractory_ms: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Inputs are raw records to preprocess rather than beat CSV.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub signal: SignalArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Angular frequency of class A (labeled N).
    #[arg(long, default_value_t = 0.3)]
    pub omega_a: f64,
    /// Angular frequency of class B (labeled E).
    #[arg(long, default_value_t = 0.9)]
    pub omega_b: f64,
    /// Beats per class, split 40/30/30 into train, validation and test.
    #[arg(long, default_value_t = 200)]
    pub beats: usize,
    /// Samples per beat.
    #[arg(long, default_value_t = 30)]
    pub beat_len: usize,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Random seed (default: the configured seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write this many raw records per class to raw.txt.
    #[arg(long)]
    pub raw_records: Option<usize>,
    #[arg(long, default_value = "data")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Raw record file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Beat CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Expect several beats per record instead of one.
    #[arg(long)]
    pub multi: bool,
    #[command(flatten)]
    pub signal: SignalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    /// Normal beats.
    N,
    /// Ectopic beats.
    E,
}

#[derive(Debug, Args)]
pub struct FitLawArgs {
    #[arg(long = "class", value_enum, default_value = "n")]
    pub class: ClassArg,
    /// Law length ℓ (default: the configured law_len).
    #[arg(long)]
    pub law_len: Option<usize>,
    #[arg(long)]
    pub train: PathBuf,
    /// Accept an ambiguous smallest eigenvalue.
    #[arg(long)]
    pub allow_degenerate: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the coefficients as plot-ready CSV.
    #[arg(long)]
    pub coefficients_csv: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Validation beats; without it the training file is split.
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub min: Option<usize>,
    #[arg(long)]
    pub max: Option<usize>,
    /// CSV output (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Law file; repeat for stacked multi-law features.
    #[arg(long, required = true)]
    pub law: Vec<PathBuf>,
    #[arg(long = "in")]
    pub input_file: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Knn,
    Svm,
    SvmLinear,
    Rf,
    Mlp,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Training features written by `transform`.
    #[arg(long)]
    pub features: PathBuf,
    /// Validation features; accuracy is logged.
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub law: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Test beats.
    #[arg(long)]
    pub test: PathBuf,
    /// Metrics CSV: model,role,total,artifacts,tp,tn,fp,fn,acc,se_normal,pp_normal,se_ectopic,pp_ectopic,acc_percent.
    #[arg(long)]
    pub report: PathBuf,
    /// Leave artifact beats out of the scores.
    #[arg(long)]
    pub exclude_artifacts: bool,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Directory with train.csv, test.csv and optionally validation.csv.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Choose the forest depth on the validation set.
    #[arg(long)]
    pub rf_select: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<LltError>() {
        Some(LltError::Audit(_)) | Some(LltError::Checksum { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
