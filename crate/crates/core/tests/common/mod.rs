#![allow(dead_code)]

use std::path::{Path, PathBuf};

use curricula::corpus::{ingest, Corpus};
use curricula::lm::{train_on_slice, LmConfig};
use curricula::metrics::{score_corpus, MetricId, ScoreRun, ScoringContext, Tokenizer, TokenizerSpec};
use curricula::scheduler::{compose_warmup, CurriculumPlan, PacingKind};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn bpe() -> Tokenizer {
    let d = data_dir();
    TokenizerSpec::bpe(d.join("bpe_vocab.json"), d.join("bpe_merges.txt"))
        .load()
        .expect("bundled tokenizer")
}

pub fn load(name: &str) -> Corpus {
    ingest(&[data_dir().join(name)], &Tokenizer::Whitespace).expect("bundled corpus")
}

/// Scores every metric, training the perplexity model on a 10% slice.
pub fn score_all(corpus: &Corpus, seed: u64) -> ScoreRun {
    let lm = train_on_slice(&corpus.documents, 0.1, 10_000, seed, LmConfig::default()).unwrap();
    let ctx = ScoringContext::new(bpe()).with_lm(lm);
    score_corpus(&corpus.documents, &MetricId::ALL, &ctx).unwrap()
}

pub const STRATEGIES: [&str; 5] = ["vanilla", "paced", "interleaved", "shuffled_baseline", "warmup"];

/// The plan set used for the golden order hashes.
pub fn golden_plan(strategy: &str, metric: MetricId, seed: u64, total_tokens: u64) -> CurriculumPlan {
    let half = total_tokens / 2;
    let third = total_tokens / 3;
    match strategy {
        "vanilla" => {
            let mut p = CurriculumPlan::vanilla(metric, None);
            p.seed = seed;
            p
        }
        "paced" => CurriculumPlan::paced(metric, PacingKind::Quadratic, 3, half, seed),
        "interleaved" => CurriculumPlan::interleaved(metric, 4, 3, half, seed),
        "shuffled_baseline" => CurriculumPlan::shuffled_baseline(Some(half), seed),
        "warmup" => compose_warmup(
            CurriculumPlan::paced(metric, PacingKind::InverseQuadratic, 3, third, seed),
            third,
            third,
        )
        .unwrap(),
        other => panic!("unknown strategy {other}"),
    }
}

pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}
