use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "slidescribe",
    version,
    about = "Transcripts, chapter marks and captions from narrated slide decks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Each one may also come from the
/// `--config` file, under the same name without the leading dashes.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Key-value settings file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Root for generated files.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    /// Recognition language tag.
    #[arg(long, global = true, value_name = "TAG")]
    pub language: Option<String>,

    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,

    /// JSON table of scripted recognitions for the mock backend.
    #[arg(long, global = true, value_name = "FILE")]
    pub mock_fixtures: Option<PathBuf>,

    /// Shell command converting `{input}` to 16 kHz mono 16-bit WAV at `{output}`.
    #[arg(long, global = true, value_name = "TEMPLATE")]
    pub transcoder: Option<String>,

    /// Concurrent recognitions.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,

    /// Backend requests per rolling minute.
    #[arg(long, global = true, value_name = "PER_MINUTE", value_parser = clap::value_parser!(u32).range(1..))]
    pub rate_limit: Option<u32>,

    /// Maximum number of phrase hints sent per request.
    #[arg(long, global = true, value_name = "N")]
    pub hint_cap: Option<usize>,

    /// Seconds assumed for slides with no known duration.
    #[arg(long, global = true, value_name = "SECONDS")]
    pub fallback_duration: Option<u64>,

    /// Where recognized segments are remembered between runs.
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Skip the timed cue file.
    #[arg(long, global = true)]
    pub no_cues: bool,

    /// Environment variable holding the speech service key.
    #[arg(long, global = true, value_name = "NAME")]
    pub key_env: Option<String>,

    /// Speech service URL for the rest backend.
    #[arg(long, global = true, value_name = "URL")]
    pub endpoint: Option<String>,

    /// Retries after a transient backend failure.
    #[arg(long, global = true, value_name = "N")]
    pub max_retries: Option<u32>,

    /// Italic line placed under the transcript title.
    #[arg(long, global = true, value_name = "TEXT")]
    pub preamble: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Rest,
    Mock,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Show slides, narration and durations without transcribing.
    Inspect { deck: PathBuf },

    /// Transcribe a deck and write transcript, chapters, cues and captions.
    Pipeline { deck: PathBuf },

    /// Compare automatic transcripts against their corrected versions.
    Analyze(AnalyzeArgs),

    /// Recover plain caption text from a (corrected) transcript.
    Captions {
        transcript: PathBuf,

        /// Output file; defaults to captions.txt beside the transcript,
        /// or under --output-dir when given.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Automatic transcript, or a directory of them.
    #[arg(requires = "corrected")]
    pub auto: Option<PathBuf>,

    /// Corrected transcript, or a directory paired by file name.
    pub corrected: Option<PathBuf>,

    /// An explicit automatic/corrected pair; repeatable.
    #[arg(long, num_args = 2, value_names = ["AUTO", "CORRECTED"])]
    pub pair: Vec<PathBuf>,

    /// Number of most common changes listed per lecture.
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,

    /// Compare narration paragraphs only, not headings and duration lines.
    #[arg(long)]
    pub body_only: bool,

    #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
    pub format: ReportFormat,

    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Json,
}
