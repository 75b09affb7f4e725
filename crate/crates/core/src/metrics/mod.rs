//! Per-document difficulty metrics.

mod compression;
mod lexical;
mod readability;
mod score;
pub(crate) mod text;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use compression::{compression_ratio, deflate_len, DEFAULT_DEFLATE_LEVEL, MIN_COMPRESSION_BYTES};
pub use lexical::{hdd, mtld, ttr, HDD_SAMPLE, MTLD_MIN_TOKENS, MTLD_THRESHOLD};
pub use readability::{flesch_reading_ease, readability_family};
pub use score::{score_corpus, score_document, ScoreError, ScoreRun, ScoringContext, TimingReport, TimingRow};
pub use text::{count_sentences, syllable_count, word_tokens, words, TextStats, WordList};
pub use tokenize::{Bpe, Tokenizer, TokenizerKind, TokenizerSpec, WORD_BOUNDARY};

use crate::{Error, Result, Scalar};

/// The fifteen candidate difficulty metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    CompressionRatio,
    Fertility,
    FleschReadingEase,
    Mtld,
    NumTokens,
    Perplexity,
    Ttr,
    Hdd,
    FkGrade,
    ColemanLiau,
    Ari,
    DaleChall,
    LinsearWrite,
    GunningFog,
    Smog,
}

/// Which direction of a metric counts as easy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    HigherEasier,
    LowerEasier,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::HigherEasier => Polarity::LowerEasier,
            Polarity::LowerEasier => Polarity::HigherEasier,
        }
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "higher_easier" => Ok(Polarity::HigherEasier),
            "lower_easier" => Ok(Polarity::LowerEasier),
            _ => Err(Error::Config(format!(
                "polarity must be `higher_easier` or `lower_easier`, got `{s}`"
            ))),
        }
    }
}

impl MetricId {
    pub const ALL: [MetricId; 15] = [
        MetricId::CompressionRatio,
        MetricId::Fertility,
        MetricId::FleschReadingEase,
        MetricId::Mtld,
        MetricId::NumTokens,
        MetricId::Perplexity,
        MetricId::Ttr,
        MetricId::Hdd,
        MetricId::FkGrade,
        MetricId::ColemanLiau,
        MetricId::Ari,
        MetricId::DaleChall,
        MetricId::LinsearWrite,
        MetricId::GunningFog,
        MetricId::Smog,
    ];

    /// The six metrics used for curricula.
    pub const SELECTED: [MetricId; 6] = [
        MetricId::CompressionRatio,
        MetricId::Fertility,
        MetricId::FleschReadingEase,
        MetricId::Mtld,
        MetricId::NumTokens,
        MetricId::Perplexity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::CompressionRatio => "compression_ratio",
            MetricId::Fertility => "fertility",
            MetricId::FleschReadingEase => "flesch_reading_ease",
            MetricId::Mtld => "mtld",
            MetricId::NumTokens => "num_tokens",
            MetricId::Perplexity => "perplexity",
            MetricId::Ttr => "ttr",
            MetricId::Hdd => "hdd",
            MetricId::FkGrade => "fk_grade",
            MetricId::ColemanLiau => "coleman_liau",
            MetricId::Ari => "ari",
            MetricId::DaleChall => "dale_chall",
            MetricId::LinsearWrite => "linsear_write",
            MetricId::GunningFog => "gunning_fog",
            MetricId::Smog => "smog",
        }
    }

    pub fn is_selected(self) -> bool {
        Self::SELECTED.contains(&self)
    }

    pub fn is_readability(self) -> bool {
        matches!(
            self,
            MetricId::FleschReadingEase
                | MetricId::FkGrade
                | MetricId::ColemanLiau
                | MetricId::Ari
                | MetricId::DaleChall
                | MetricId::LinsearWrite
                | MetricId::GunningFog
                | MetricId::Smog
        )
    }

    /// Default easy direction of the metric.
    pub fn polarity(self) -> Polarity {
        match self {
            MetricId::CompressionRatio | MetricId::FleschReadingEase => Polarity::HigherEasier,
            _ => Polarity::LowerEasier,
        }
    }

    /// Parses a comma-separated list; `all` and `selected` expand to the
    /// corresponding sets.
    pub fn parse_list(s: &str) -> Result<Vec<MetricId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out.extend(Self::ALL),
                "selected" => out.extend(Self::SELECTED),
                p => out.push(p.parse()?),
            }
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|m| seen.insert(*m));
        if out.is_empty() {
            return Err(Error::Config("empty metric list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

/// Polarity registry with per-metric overrides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolarityMap {
    overrides: Vec<(MetricId, Polarity)>,
}

impl PolarityMap {
    pub fn with_override(mut self, metric: MetricId, polarity: Polarity) -> Self {
        self.overrides.retain(|(m, _)| *m != metric);
        self.overrides.push((metric, polarity));
        self
    }

    pub fn get(&self, metric: MetricId) -> Polarity {
        self.overrides
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|(_, p)| *p)
            .unwrap_or_else(|| metric.polarity())
    }
}

/// Subword tokens per whitespace-separated word.
pub fn fertility<F: Scalar>(text: &str, tokenizer: &Tokenizer) -> Result<F> {
    let words = text.split_whitespace().count();
    if words == 0 {
        return Err(Error::degenerate(MetricId::Fertility, "no words"));
    }
    Ok(F::count(tokenizer.count(text)) / F::count(words))
}

pub fn num_tokens(text: &str, tokenizer: &Tokenizer) -> usize {
    tokenizer.count(text)
}
