//! Difficulty scoring and curriculum ordering for pretraining corpora.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`corpus`] ingests JSONL documents and persists per-document score tables.
//! 2. [`metrics`] computes the fifteen difficulty signals (readability, lexical
//!    diversity, compression, fertility, length and n-gram perplexity).
//! 3. [`analysis`] builds Spearman correlation matrices over those signals.
//! 4. [`scheduler`] turns scores into curriculum plans: strict ordering,
//!    difficulty groups, pacing allocations, interleaving and warmup.
//! 5. [`builder`] materializes a plan into a deterministic order manifest and
//!    JSONL shards, and [`probe`] replays shards through an incremental n-gram
//!    model to measure convergence.
//!
//! Numeric code that does not need to persist bit-exact values is generic over
//! [`Scalar`]; the aliases below fix the common `f64` instantiations.

pub mod analysis;
pub mod builder;
pub mod corpus;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod probe;
pub mod rng;
pub mod scalar;
pub mod scheduler;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
pub use scalar::Scalar;

pub use builder::OrderManifest;
pub use corpus::{CorpusManifest, Document, ScoreTable};
pub use lm::NGramModel;
pub use metrics::{MetricId, Polarity, TextStats, TokenizerSpec};
pub use probe::{SavingsReport, Trajectory};
pub use scheduler::{Allocation, CurriculumPlan, DifficultyGrouping, PacingKind, Strategy};

/// Scores persisted in a [`ScoreTable`] are always double precision.
pub type Score = f64;

/// Correlation matrix in double precision.
pub type CorrelationMatrix = analysis::CorrelationMatrix<f64>;
/// Correlation matrix in single precision.
pub type CorrelationMatrix32 = analysis::CorrelationMatrix<f32>;
