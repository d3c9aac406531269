//! Command-line front end. Each subcommand loads its inputs, calls one
//! library operation and writes the serialized result.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{BackendUrls, ConfigFile, RunConfig};

use crate::backend::BackendError;
use crate::benchmark::BenchmarkError;
use crate::filter::FilterError;
use crate::questions::QuestionGenError;
use crate::scoring::ScoringError;
use crate::stats::{Scale, StatsError};
use crate::table::TableFormat;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BACKEND: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Backend(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Backend(_) => EXIT_BACKEND,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<QuestionGenError> for CliError {
    fn from(e: QuestionGenError) -> Self {
        match e {
            QuestionGenError::Backend(b) => b.into(),
            QuestionGenError::EmptyCaption => CliError::Data(e.to_string()),
            QuestionGenError::ExampleSet(_) | QuestionGenError::Config(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::UnknownPrompt { .. } => CliError::Data(e.to_string()),
            FilterError::TotalBackendFailure(_) => CliError::Backend(e.to_string()),
            FilterError::Backend(b) => b.into(),
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::Backend(b) => b.into(),
            ScoringError::NoSimilarityBackend => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tifa",
    version,
    about = "Text-to-image faithfulness evaluation with question answering"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON config file with backend URLs and client settings.
    #[arg(long, global = true, env = "TIFA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Response cache directory.
    #[arg(long, global = true, env = "TIFA_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Answer every backend request from the cache; fail on a miss.
    #[arg(long, global = true, env = "TIFA_OFFLINE")]
    pub offline: bool,
    /// Upper bound on concurrent backend requests.
    #[arg(long, global = true, env = "TIFA_MAX_IN_FLIGHT")]
    pub max_in_flight: Option<usize>,
    /// Bearer token sent to backends.
    #[arg(long, global = true, env = "TIFA_API_TOKEN", hide_env_values = true)]
    pub api_token: Option<String>,
    /// Output format for tables: md, csv or json.
    #[arg(long, global = true, default_value_t = TableFormat::Markdown)]
    pub format: TableFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate question-answer tuples for each prompt with a language model.
    Generate(GenerateArgs),
    /// Keep only tuples whose answers a text QA model reproduces.
    Filter(FilterArgs),
    /// Answer questions on generated images and write records and reports.
    Score(ScoreArgs),
    /// Rebuild reports from an existing records file without backend calls.
    Report(ReportArgs),
    /// Correlate per-image metric scores with human Likert ratings.
    Correlate(CorrelateArgs),
    /// Krippendorff's alpha over annotator ratings or answers.
    Agreement(AgreementArgs),
    /// Split wrong VQA answers into image errors and VQA-model errors.
    Attribute(AttributeArgs),
    /// Summary counts for a benchmark file.
    Stats(StatsArgs),
    /// Convert released TIFA v1.0 question files into the native format.
    Import(ImportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Prompt records, one JSON object per line.
    #[arg(long)]
    pub prompts: PathBuf,
    /// Language model backend URL.
    #[arg(long, env = "TIFA_LM_URL")]
    pub lm: Option<String>,
    /// Generation settings (temperature, max_tokens, stop, example_set).
    #[arg(long)]
    pub gen_config: Option<PathBuf>,
    /// Output benchmark file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Benchmark file with prompts and question-answer tuples.
    #[arg(long)]
    pub questions: PathBuf,
    /// Question answering backend URL.
    #[arg(long, env = "TIFA_QA_URL")]
    pub qa: Option<String>,
    /// Minimum free-form F1 (exclusive) for a tuple to be kept.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output benchmark file with the kept tuples.
    #[arg(long)]
    pub out: PathBuf,
    /// Verdict log; defaults to `<out>.verdicts.jsonl`.
    #[arg(long)]
    pub verdicts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Benchmark file with prompts and question-answer tuples.
    #[arg(long)]
    pub questions: PathBuf,
    /// Image manifest, one JSON object per line.
    #[arg(long)]
    pub images: PathBuf,
    /// VQA backend URL.
    #[arg(long, env = "TIFA_VQA_URL")]
    pub vqa: Option<String>,
    /// Similarity backend URL, needed unless the VQA backend picks choices itself.
    #[arg(long, env = "TIFA_SIM_URL")]
    pub sim: Option<String>,
    /// Directory receiving records.jsonl, report.json and report.md.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Benchmark file with prompts and question-answer tuples.
    #[arg(long)]
    pub questions: PathBuf,
    /// Image manifest used for the original run.
    #[arg(long)]
    pub images: PathBuf,
    /// records.jsonl from `score`.
    #[arg(long)]
    pub records: PathBuf,
    /// Directory receiving report.json and report.md.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Human Likert ratings: {"image_id", "annotator", "score"} per line.
    #[arg(long)]
    pub human: PathBuf,
    /// report.json from `score`; contributes a `tifa` row.
    #[arg(long, conflicts_with = "records")]
    pub report: Option<PathBuf>,
    /// records.jsonl from `score`; contributes a `tifa` row.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Extra metric as NAME=FILE, where FILE holds {"image_id", "score"} lines.
    #[arg(long = "metric", value_name = "NAME=FILE")]
    pub metrics: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Likert ratings {"image_id", "annotator", "score"} or VQA answers
    /// {"tuple_id", "image_id", "annotator", "answer"}.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Distance used between values: nominal or ordinal.
    #[arg(long, default_value = "nominal")]
    pub scale: Scale,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    /// records.jsonl from `score`.
    #[arg(long)]
    pub records: PathBuf,
    /// Benchmark file with prompts and question-answer tuples.
    #[arg(long)]
    pub questions: PathBuf,
    /// Human VQA answers {"tuple_id", "image_id", "annotator", "answer"}.
    #[arg(long)]
    pub human: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Benchmark file with prompts and question-answer tuples.
    #[arg(long)]
    pub benchmark: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Released question file (JSON array or JSON lines).
    #[arg(long)]
    pub qa: PathBuf,
    /// Optional separate text-input file.
    #[arg(long)]
    pub text_inputs: Option<PathBuf>,
    /// Output benchmark file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    commands::dispatch(cli)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
