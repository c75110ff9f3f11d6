use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;

use bitext_core::ingest::CorpusFormat;
use bitext_core::SimilarityThreshold;
use bitext_curation::ExportOrder;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

/// Parallel-corpus cleaning, scoring, evaluation and gold-set curation.
///
/// Data goes to the files named by flags or to standard output; logs go to
/// standard error (set RUST_LOG to change verbosity).
#[derive(Debug, Parser)]
#[command(name = "bitext", version)]
pub struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop exact duplicate pairs (after normalization), keeping the first.
    Dedup(DedupArgs),
    /// Attach an embedding similarity to every pair.
    Score(ScoreArgs),
    /// Split a scored corpus at a similarity threshold.
    Filter(FilterArgs),
    /// Dedup, score and filter in one streaming pass.
    Run(RunArgs),
    /// Compute BLEU, METEOR, chrF, chrF++ and embedding similarity.
    Evaluate(EvaluateArgs),
    /// Draw a seeded random review queue from a corpus.
    Sample(SampleArgs),
    /// Serve the review API and UI.
    Serve(ServeArgs),
    /// Write the accepted pairs of a review session as an evaluation set.
    ExportGold(ExportGoldArgs),
    /// Summarize a run's stats file or a review log.
    Report(ReportArgs),
}

/// Embedding provider selection. The remote URL falls back to
/// BITEXT_PROVIDER_URL.
#[derive(Debug, Clone, Default, Args)]
pub struct ProviderArgs {
    /// `mock` (default) or `remote`.
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub provider_url: Option<String>,
    /// Texts per request to the remote provider.
    #[arg(long)]
    pub provider_batch: Option<usize>,
    #[arg(long)]
    pub provider_dim: Option<usize>,
}

impl ProviderArgs {
    pub fn insert_into(&self, map: &mut BTreeMap<String, String>) {
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        put("provider", self.provider.clone());
        put("provider_url", self.provider_url.clone());
        put("provider_batch", self.provider_batch.map(|n| n.to_string()));
        put("provider_dim", self.provider_dim.map(|n| n.to_string()));
    }
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    #[arg(long)]
    pub out: PathBuf,
    /// Output format; inferred from the extension, else the input format.
    #[arg(long)]
    pub out_format: Option<CorpusFormat>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// Scored JSONL output.
    #[arg(long)]
    pub out: PathBuf,
    /// Pairs that cannot be scored (zero vectors) go here.
    #[arg(long)]
    pub unscored: Option<PathBuf>,
    /// Persistent score cache (JSONL).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Scored JSONL input.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value = "0.7")]
    pub tau: SimilarityThreshold,
    #[arg(long)]
    pub kept: PathBuf,
    #[arg(long)]
    pub rejected: PathBuf,
    /// Also write counts and the score histogram as JSON.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

/// Every flag overrides the config-file key of the same name (dashes become
/// underscores; `--in` is `input`).
#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub kept: Option<String>,
    #[arg(long)]
    pub rejected: Option<String>,
    #[arg(long)]
    pub unscored: Option<String>,
    #[arg(long)]
    pub stats: Option<String>,
    #[arg(long)]
    pub manifest: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub cache: Option<String>,
    #[arg(long)]
    pub jobs: Option<String>,
    /// Pairs buffered between reading and scoring.
    #[arg(long)]
    pub queue: Option<String>,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    /// Add 0.1 to zero n-gram match counts.
    Epsilon,
    None,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL with `hyp` and `ref` (or `tgt`) per line.
    #[arg(long)]
    pub set: PathBuf,
    /// Plain-text hypotheses, one per line, replacing `hyp`.
    #[arg(long)]
    pub hyp: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "epsilon")]
    pub smoothing: SmoothingArg,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Review queue output (JSONL).
    #[arg(long)]
    pub queue: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub queue: PathBuf,
    /// Append-only event log; created if missing, replayed if present.
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = 600)]
    pub lease_secs: u32,
    /// Static review UI bundle served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportGoldArgs {
    #[arg(long)]
    pub queue: PathBuf,
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub limit: Option<usize>,
    /// `decision` (log order) or `score` (highest similarity first).
    #[arg(long, default_value = "decision")]
    pub order: ExportOrder,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["stats", "log"])))]
pub struct ReportArgs {
    /// Stats JSON written by `run` or `filter`.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Review event log; prints per-label counts and the defect rate.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}
