//! Command-line surface.
//!
//! Every flag with a default can also come from a TOML config file
//! (`--config`) or from a `PEDATTR_*` environment variable; precedence is
//! flag, then environment, then config file, then built-in default. The
//! fully resolved configuration is logged and echoed into every report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "pedattr",
    version,
    about = "Identity-disjoint dataset splitting and multi-label attribute evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Search one or more identity-disjoint train/valid/test splits
    Split(SplitArgs),
    /// Check a split against the construction criteria
    Verify(VerifyArgs),
    /// Evaluate a prediction file on the test part of a split
    Eval(EvalArgs),
    /// Measure train/test identity overlap of a split
    Audit(AuditArgs),
    /// Compute class-imbalance weights from the training part of a split
    Weights(WeightsArgs),
    /// Generate a synthetic identity-structured dataset
    Synth(SynthArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// TOML config file providing flag defaults (and a [synth] section)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Where to write the report envelope [default: pedattr-report.json]
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Cap the number of worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset file to split
    #[arg(long)]
    pub dataset: PathBuf,
    /// Base seed; version v searches with a seed derived from (seed, v)
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Identity-count slack [default: 50]
    #[arg(long)]
    pub t_id: Option<u64>,
    /// Valid/test image-count slack [default: 300]
    #[arg(long)]
    pub t_img: Option<u64>,
    /// Per-attribute positive-ratio slack [default: 0.03]
    #[arg(long)]
    pub t_attr: Option<f64>,
    /// Trials before the search gives up [default: 100000]
    #[arg(long)]
    pub max_trials: Option<u64>,
    /// Number of independent split versions [default: 1]
    #[arg(long)]
    pub versions: Option<usize>,
    /// Output directory for split files
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Split file to check
    #[arg(long)]
    pub split: PathBuf,
    /// Identity-count slack [default: 50]
    #[arg(long)]
    pub t_id: Option<u64>,
    /// Valid/test image-count slack [default: 300]
    #[arg(long)]
    pub t_img: Option<u64>,
    /// Per-attribute positive-ratio slack [default: 0.03]
    #[arg(long)]
    pub t_attr: Option<f64>,
    /// Exit nonzero when any criterion fails
    #[arg(long)]
    pub strict: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroDivisionArg {
    EpsZero,
    One,
    Skip,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Prediction file covering the test part
    #[arg(long)]
    pub preds: PathBuf,
    /// Classification threshold [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// How 0/0 per-sample ratios contribute [default: eps-zero]
    #[arg(long, value_enum)]
    pub zero_division: Option<ZeroDivisionArg>,
    /// Also report seen-identity / unseen-identity test strata
    #[arg(long)]
    pub stratify: bool,
    /// Average label metrics over non-degenerate attributes instead of
    /// failing
    #[arg(long)]
    pub skip_degenerate: bool,
    /// Accept predictions whose stored dataset checksum does not match
    #[arg(long)]
    pub allow_checksum_mismatch: bool,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFunctionArg {
    Wf1,
    Wf2,
    Wf3,
}

#[derive(Args, Debug)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Split whose training part defines the positive ratios
    #[arg(long)]
    pub split: PathBuf,
    /// Weight function
    #[arg(long, value_enum)]
    pub wf: WeightFunctionArg,
    /// Exponent for wf3 [default: 1.0]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output path for the weight table
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Override the generator seed from the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for the dataset and feature sidecar (generation
    /// mode)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub action: Option<SynthAction>,
}

#[derive(Subcommand, Debug)]
pub enum SynthAction {
    /// Compare the memorization oracle on random vs zero-shot splits of
    /// freshly generated datasets
    DemoLeakage {
        /// Number of paired runs [default: 5]
        #[arg(long)]
        pairs: Option<usize>,
    },
}
