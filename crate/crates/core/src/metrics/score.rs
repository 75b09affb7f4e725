use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{
    compression_ratio, fertility, hdd, mtld, readability_family, ttr, word_tokens, MetricId, TextStats, Tokenizer,
    WordList, DEFAULT_DEFLATE_LEVEL,
};
use crate::corpus::{Document, ScoreRow, ScoreTable};
use crate::lm::NGramModel;
use crate::{Error, Result};

/// Everything a scorer needs besides the document itself.
#[derive(Debug, Clone)]
pub struct ScoringContext {
    pub tokenizer: Arc<Tokenizer>,
    pub deflate_level: u32,
    pub dale_chall: Option<Arc<WordList>>,
    pub lm: Option<Arc<NGramModel>>,
}

impl ScoringContext {
    pub fn new(tokenizer: Tokenizer) -> Self {
        ScoringContext {
            tokenizer: Arc::new(tokenizer),
            deflate_level: DEFAULT_DEFLATE_LEVEL,
            dale_chall: Some(Arc::new(WordList::dale_chall())),
            lm: None,
        }
    }

    pub fn with_lm(mut self, lm: NGramModel) -> Self {
        self.lm = Some(Arc::new(lm));
        self
    }

    fn check(&self, metrics: &[MetricId]) -> Result<()> {
        let wants_ppl = metrics.contains(&MetricId::Perplexity);
        match (wants_ppl, self.lm.is_some()) {
            (true, false) => Err(Error::Config(
                "perplexity requested but no language model supplied".into(),
            )),
            (false, true) => Err(Error::Config(
                "language model supplied but perplexity not requested".into(),
            )),
            _ => Ok(()),
        }?;
        if metrics.contains(&MetricId::DaleChall) && self.dale_chall.is_none() {
            return Err(Error::Config(
                "dale_chall requested but no Dale–Chall word list is loaded".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreError {
    pub doc_id: String,
    pub metric: MetricId,
    pub reason: String,
}

/// Scores of one document, aligned with the requested metric list.
#[derive(Debug, Clone)]
pub struct DocScores {
    pub token_count: u64,
    pub values: Vec<Option<f64>>,
    pub errors: Vec<(MetricId, String)>,
    metric_time: Vec<Duration>,
    prep_time: [Duration; 3],
}

const PREP_LABELS: [&str; 3] = ["prep:tokenize", "prep:text_stats", "prep:word_tokens"];

/// Computes `metrics` for one document. Failures are reported per metric.
pub fn score_document(doc: &Document, metrics: &[MetricId], ctx: &ScoringContext) -> DocScores {
    let text = doc.text.as_str();
    let mut prep_time = [Duration::ZERO; 3];

    let t0 = Instant::now();
    let token_count = ctx.tokenizer.count(text) as u64;
    prep_time[0] = t0.elapsed();

    let mut stats: Option<TextStats> = None;
    let mut tokens: Option<Vec<String>> = None;
    let mut values = Vec::with_capacity(metrics.len());
    let mut errors = Vec::new();
    let mut metric_time = Vec::with_capacity(metrics.len());

    for &metric in metrics {
        if metric.is_readability() && stats.is_none() {
            let t = Instant::now();
            stats = Some(TextStats::from_text(text, ctx.dale_chall.as_deref()).with_tokens(token_count as usize));
            prep_time[1] += t.elapsed();
        }
        if matches!(metric, MetricId::Mtld | MetricId::Ttr | MetricId::Hdd) && tokens.is_none() {
            let t = Instant::now();
            tokens = Some(word_tokens(text));
            prep_time[2] += t.elapsed();
        }

        let t = Instant::now();
        let result: Result<f64> = match metric {
            MetricId::CompressionRatio => compression_ratio(text.as_bytes(), ctx.deflate_level),
            MetricId::Fertility => fertility(text, &ctx.tokenizer),
            MetricId::NumTokens => Ok(token_count as f64),
            MetricId::Perplexity => match &ctx.lm {
                Some(lm) => lm.perplexity(text),
                None => Err(Error::Config("no language model".into())),
            },
            MetricId::Mtld => mtld(tokens.as_deref().expect("tokens computed")),
            MetricId::Ttr => ttr(tokens.as_deref().expect("tokens computed")),
            MetricId::Hdd => hdd(tokens.as_deref().expect("tokens computed")),
            m => readability_family(stats.as_ref().expect("stats computed"), m),
        };
        metric_time.push(t.elapsed());

        match result {
            Ok(v) if v.is_finite() => values.push(Some(v)),
            Ok(v) => {
                values.push(None);
                errors.push((metric, format!("non-finite value {v}")));
            }
            Err(e) => {
                values.push(None);
                errors.push((metric, e.to_string()));
            }
        }
    }

    DocScores {
        token_count,
        values,
        errors,
        metric_time,
        prep_time,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub label: String,
    pub docs: usize,
    pub seconds: f64,
}

impl TimingRow {
    pub fn docs_per_second(&self) -> f64 {
        if self.seconds > 0.0 {
            self.docs as f64 / self.seconds
        } else {
            0.0
        }
    }
}

/// Per-metric compute time, summed over worker threads, plus a `total` row
/// holding wall-clock time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric_id,docs,seconds,docs_per_second\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.3}\n",
                r.label,
                r.docs,
                r.seconds,
                r.docs_per_second()
            ));
        }
        out
    }

    pub fn parse_csv(contents: &str) -> Result<Self> {
        let mut lines = contents.lines();
        if lines.next() != Some("metric_id,docs,seconds,docs_per_second") {
            return Err(Error::format("timing report", "unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::format("timing report", format!("line {}", i + 2));
            if cols.len() != 4 {
                return Err(bad());
            }
            rows.push(TimingRow {
                label: cols[0].to_owned(),
                docs: cols[1].parse().map_err(|_| bad())?,
                seconds: cols[2].parse().map_err(|_| bad())?,
            });
        }
        Ok(TimingReport { rows })
    }

    pub fn get(&self, label: &str) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

#[derive(Debug, Clone)]
pub struct ScoreRun {
    pub table: ScoreTable,
    pub errors: Vec<ScoreError>,
    pub timing: TimingReport,
}

impl ScoreRun {
    /// Error log as CSV `doc_id,metric_id,reason`.
    pub fn errors_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["doc_id", "metric_id", "reason"])
            .expect("in-memory write");
        for e in &self.errors {
            w.write_record([e.doc_id.as_str(), e.metric.as_str(), e.reason.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Scores every document on the current rayon pool.
///
/// Rows keep input order regardless of scheduling. A document appears in the
/// table when at least one metric succeeded; failed cells stay empty and are
/// listed in the error log.
pub fn score_corpus(docs: &[Document], metrics: &[MetricId], ctx: &ScoringContext) -> Result<ScoreRun> {
    ctx.check(metrics)?;
    if metrics.is_empty() {
        return Err(Error::Config("no metrics requested".into()));
    }
    let wall = Instant::now();
    let scored: Vec<DocScores> = docs.par_iter().map(|d| score_document(d, metrics, ctx)).collect();

    let mut rows = Vec::with_capacity(docs.len());
    let mut errors = Vec::new();
    let mut metric_secs = vec![0.0f64; metrics.len()];
    let mut metric_docs = vec![0usize; metrics.len()];
    let mut prep_secs = [0.0f64; 3];
    for (doc, s) in docs.iter().zip(scored) {
        for (i, t) in s.metric_time.iter().enumerate() {
            metric_secs[i] += t.as_secs_f64();
            if s.values[i].is_some() {
                metric_docs[i] += 1;
            }
        }
        for (acc, t) in prep_secs.iter_mut().zip(s.prep_time) {
            *acc += t.as_secs_f64();
        }
        errors.extend(s.errors.into_iter().map(|(metric, reason)| ScoreError {
            doc_id: doc.id.clone(),
            metric,
            reason,
        }));
        if s.values.iter().any(Option::is_some) {
            rows.push(ScoreRow {
                id: doc.id.clone(),
                token_count: s.token_count.max(1),
                values: s.values,
            });
        }
    }
    let table = ScoreTable::new(metrics.to_vec(), rows)?;

    let mut timing = TimingReport::default();
    for (i, m) in metrics.iter().enumerate() {
        timing.rows.push(TimingRow {
            label: m.as_str().to_owned(),
            docs: metric_docs[i],
            seconds: metric_secs[i],
        });
    }
    for (label, secs) in PREP_LABELS.iter().zip(prep_secs) {
        timing.rows.push(TimingRow {
            label: (*label).to_owned(),
            docs: docs.len(),
            seconds: secs,
        });
    }
    timing.rows.push(TimingRow {
        label: "total".into(),
        docs: docs.len(),
        seconds: wall.elapsed().as_secs_f64(),
    });

    Ok(ScoreRun { table, errors, timing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text)
    }

    #[test]
    fn short_doc_fails_compression_only() {
        let ctx = ScoringContext::new(Tokenizer::Whitespace);
        let docs = vec![
            doc("long", "The cat sat on the mat. The dog sat on the log. Birds sing."),
            doc("short", "Tiny text."),
        ];
        let run = score_corpus(&docs, &[MetricId::CompressionRatio], &ctx).unwrap();
        assert_eq!(run.table.len(), 1);
        assert!(run.table.row("short").is_none());
        assert_eq!(run.errors.len(), 1);
        assert_eq!(run.errors[0].doc_id, "short");
        assert_eq!(run.errors[0].metric, MetricId::CompressionRatio);

        let run = score_corpus(&docs, &[MetricId::CompressionRatio, MetricId::NumTokens], &ctx).unwrap();
        assert_eq!(run.table.len(), 2);
        assert_eq!(run.table.value("short", MetricId::CompressionRatio), None);
        assert_eq!(run.table.value("short", MetricId::NumTokens), Some(2.0));
    }

    #[test]
    fn lm_presence_must_match_request() {
        let ctx = ScoringContext::new(Tokenizer::Whitespace);
        let docs = vec![doc("a", "some words here")];
        assert!(matches!(
            score_corpus(&docs, &[MetricId::Perplexity], &ctx),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn timing_csv_round_trip() {
        let ctx = ScoringContext::new(Tokenizer::Whitespace);
        let docs = vec![doc("a", "The cat sat on the mat and then it slept for a while.")];
        let run = score_corpus(&docs, &[MetricId::FkGrade, MetricId::Ttr], &ctx).unwrap();
        let csv = run.timing.to_csv();
        assert!(csv.starts_with("metric_id,docs,seconds,docs_per_second\n"));
        let parsed = TimingReport::parse_csv(&csv).unwrap();
        assert_eq!(parsed.rows.len(), run.timing.rows.len());
        assert_eq!(parsed.get("fk_grade").unwrap().docs, 1);
        assert!(parsed.get("total").is_some());
    }
}
