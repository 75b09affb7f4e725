use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Difficulty scoring and curriculum ordering for pretraining corpora.
#[derive(Debug, Parser)]
#[command(name = "currictl", version)]
pub struct Cli {
    /// Worker threads; never changes outputs.
    #[arg(long, global = true, env = "CURRICTL_THREADS")]
    pub threads: Option<usize>,

    /// Root seed for every random choice.
    #[arg(long, global = true, env = "CURRICTL_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Score documents on difficulty metrics.
    Score(ScoreArgs),
    /// Spearman correlation matrix over a score table.
    Correlate(CorrelateArgs),
    /// Write a curriculum plan file.
    Plan(PlanArgs),
    /// Materialize a plan into an order manifest and optional shards.
    Build(BuildArgs),
    /// Replay an order through an n-gram probe and track held-out perplexity.
    Probe(ProbeArgs),
    /// Timing and cost table from earlier runs.
    Report(ReportArgs),
    /// Rerun a recorded invocation and check that its outputs are identical.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::Correlate(_) => "correlate",
            Command::Plan(_) => "plan",
            Command::Build(_) => "build",
            Command::Probe(_) => "probe",
            Command::Report(_) => "report",
            Command::Replay(_) => "replay",
        }
    }

    pub fn out_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Score(a) => Some(&mut a.out),
            Command::Correlate(a) => Some(&mut a.out),
            Command::Plan(a) => Some(&mut a.out),
            Command::Build(a) => Some(&mut a.out),
            Command::Probe(a) => Some(&mut a.out),
            Command::Report(a) => Some(&mut a.out),
            Command::Replay(_) => None,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TokenizerArgs {
    /// `whitespace` or `bpe`.
    #[arg(long, default_value = "whitespace", env = "CURRICTL_TOKENIZER")]
    pub tokenizer: String,
    /// BPE vocabulary JSON (token to id).
    #[arg(long, env = "CURRICTL_BPE_VOCAB")]
    pub bpe_vocab: Option<PathBuf>,
    /// BPE merges, one `left right` pair per line.
    #[arg(long, env = "CURRICTL_BPE_MERGES")]
    pub bpe_merges: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    /// JSONL shards with `id` and `text` fields.
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Comma-separated metric ids, or `selected` / `all`.
    #[arg(long, default_value = "selected", env = "CURRICTL_METRICS")]
    pub metrics: String,
    /// Replacement Dale–Chall familiar-word list.
    #[arg(long)]
    pub dale_chall: Option<PathBuf>,
    /// Pretrained n-gram model for perplexity; otherwise one is trained on a
    /// slice of the corpus.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub lm_fraction: f64,
    #[arg(long, default_value_t = 5000)]
    pub lm_max_docs: usize,
    #[arg(long, default_value_t = curricula::lm::DEFAULT_ORDER)]
    pub lm_order: usize,
    #[arg(long, env = "CURRICTL_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Metrics to include; defaults to every column of the table.
    #[arg(long)]
    pub metrics: Option<String>,
    /// Correlate a seeded sample of this many documents.
    #[arg(long)]
    pub sample_docs: Option<usize>,
    #[arg(long, env = "CURRICTL_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PlanArgs {
    /// vanilla, paced, interleaved, shuffled_baseline or warmup.
    #[arg(long)]
    pub strategy: String,
    #[arg(long)]
    pub metric: Option<String>,
    /// linear, quadratic or inverse_quadratic.
    #[arg(long)]
    pub pacing: Option<String>,
    /// Difficulty groups.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Interleaves.
    #[arg(long = "I")]
    pub i: Option<usize>,
    /// Token budget.
    #[arg(long = "T")]
    pub t: Option<u64>,
    /// Warmup phase budget.
    #[arg(long = "T1")]
    pub t1: Option<u64>,
    /// Continuation budget after warmup.
    #[arg(long = "T2")]
    pub t2: Option<u64>,
    /// Strategy of the warmup phase.
    #[arg(long)]
    pub inner_strategy: Option<String>,
    /// equal_tokens or equal_docs.
    #[arg(long, default_value = "equal_tokens")]
    pub grouping_mode: String,
    /// Override the metric's easy direction: higher_easier or lower_easier.
    #[arg(long)]
    pub polarity: Option<String>,
    #[arg(long, env = "CURRICTL_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    /// Corpus to write ordered shards from.
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub shard_tokens: u64,
    #[arg(long, env = "CURRICTL_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    /// Order manifest JSON, or a shard directory written by `build`.
    #[arg(long)]
    pub order: PathBuf,
    /// Baseline order to compute savings against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Corpus the manifests refer to; needed unless both orders are shard
    /// directories and `--heldout` is given.
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    /// Held-out JSONL; otherwise documents are drawn from the corpus and
    /// removed from the training orders.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub heldout_docs: usize,
    #[arg(long, default_value_t = 1000)]
    pub checkpoint_tokens: u64,
    #[arg(long, default_value_t = curricula::probe::DEFAULT_PROBE_ORDER)]
    pub probe_order: usize,
    /// Warmup continuation resumes from the `best` or `last` checkpoint.
    #[arg(long, default_value = "last")]
    pub resume: String,
    #[arg(long, env = "CURRICTL_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Per-metric timing CSVs written by `score`.
    #[arg(long, num_args = 1..)]
    pub timing: Vec<PathBuf>,
    /// `run.json` files whose wall time is added as one row each.
    #[arg(long, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Price of one compute hour, for the cost column.
    #[arg(long)]
    pub cost_per_hour: Option<f64>,
    #[arg(long, env = "CURRICTL_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A `run.json` written by an earlier invocation.
    pub run: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
