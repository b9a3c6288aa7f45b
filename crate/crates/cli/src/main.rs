//! Command-line surface: loads annotation data, runs the reliability and
//! ranking analyses, and emits reports as JSON (full precision), Markdown
//! (3-decimal tables), and plot-ready CSV.

mod cmd_agree;
mod cmd_annotate;
mod cmd_errors;
mod cmd_rankcorr;
mod cmd_xrr;
mod inputs;
mod outputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "ratereval",
    version,
    about = "Agreement, cross-group reliability, and ranking-stability reports for multi-rater annotation data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full agreement report: pairwise kappa, per-group statistics,
    /// leave-one-out, cross-group, group-level, and cross-replication
    Agree(cmd_agree::AgreeArgs),
    /// Cross-replication reliability between two rater groups
    Xrr(cmd_xrr::XrrArgs),
    /// Rank-preservation of alternative label sources under controlled
    /// gold-label degradation
    Rankcorr(cmd_rankcorr::RankcorrArgs),
    /// Confusion counts and per-target miss rates for a prediction source
    Errors(cmd_errors::ErrorsArgs),
    /// Label items through a chat-style HTTP endpoint as one machine rater
    Annotate(cmd_annotate::AnnotateArgs),
}

/// Annotation file format override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatChoice {
    Jsonl,
    Csv,
}

/// Output families a command may emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatFamily {
    Json,
    Md,
    Csv,
}

impl FormatFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            FormatFamily::Json => "json",
            FormatFamily::Md => "md",
            FormatFamily::Csv => "csv",
        }
    }
}

/// Input data flags shared by every analysis command.
#[derive(Args, Debug)]
pub struct DataArgs {
    /// Annotation judgements: JSONL objects or CSV with header item_id,rater_id,label
    #[arg(long)]
    pub annotations: PathBuf,

    /// Read --annotations as this format instead of inferring from the extension
    #[arg(long, value_enum)]
    pub annotations_format: Option<FormatChoice>,

    /// Per-item metadata JSONL: item_id plus optional text and targets
    #[arg(long)]
    pub items: Option<PathBuf>,

    /// Rater groups: JSON object mapping group name to an array of rater ids
    #[arg(long)]
    pub groups: PathBuf,

    /// Label categories, comma separated; order fixes category indices
    #[arg(long, default_value = "hate,no-hate")]
    pub categories: String,

    /// Positive class for F1-flavoured metrics (defaults to "hate" when present)
    #[arg(long)]
    pub positive: Option<String>,

    /// Rewrite label SRC to DST before building the matrix (repeatable)
    #[arg(long = "map", value_name = "SRC=DST")]
    pub map: Vec<String>,

    /// Remove every item carrying this label on any judgement (repeatable)
    #[arg(long = "drop-label", value_name = "LABEL")]
    pub drop_label: Vec<String>,

    /// Keep only items with exactly this many judgements after mapping
    #[arg(long = "require-raters", value_name = "N")]
    pub require_raters: Option<usize>,
}

/// Output destination flags shared by every analysis command.
#[derive(Args, Debug)]
pub struct OutArgs {
    /// Output directory, created when missing
    #[arg(long)]
    pub out: PathBuf,

    /// Output families to emit
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [FormatFamily::Json, FormatFamily::Md, FormatFamily::Csv])]
    pub format: Vec<FormatFamily>,

    /// Worker threads for independent metric computations; never affects
    /// output bytes
    #[arg(long, default_value_t = 1)]
    pub threads: usize,

    /// Master seed for randomized procedures
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OutArgs {
    pub fn wants(&self, family: FormatFamily) -> bool {
        self.format.contains(&family)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Agree(args) => cmd_agree::run(&args),
        Command::Xrr(args) => cmd_xrr::run(&args),
        Command::Rankcorr(args) => cmd_rankcorr::run(&args),
        Command::Errors(args) => cmd_errors::run(&args),
        Command::Annotate(args) => cmd_annotate::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
