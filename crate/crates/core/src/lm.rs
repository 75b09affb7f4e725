//! Incremental n-gram language model with interpolated Kneser–Ney or add-k
//! smoothing.
//!
//! Counts are stored per order in hash maps keyed by n-grams packed into a
//! `u128`. The highest order keeps raw counts; lower orders keep continuation
//! counts (the number of distinct left extensions), updated incrementally so
//! training can resume at any token.

use std::fmt::Write as _;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use rand::seq::index::sample;

use crate::corpus::Document;
use crate::metrics::MetricId;
use crate::rng::stream;
use crate::{Error, Result};

pub const MAX_ORDER: usize = 8;
pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_DISCOUNT: f64 = 0.75;
pub const DEFAULT_ADD_K: f64 = 0.01;

const FORMAT_HEADER: &str = "curricula-ngram v1";

// Leading spaces keep these apart from any whitespace-split token.
const UNK: &str = " <unk>";
const BOS: &str = " <s>";
const EOS: &str = " </s>";
const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    KneserNey { discount: f64 },
    AddK { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: Smoothing,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: DEFAULT_ORDER,
            smoothing: Smoothing::KneserNey {
                discount: DEFAULT_DISCOUNT,
            },
        }
    }
}

impl LmConfig {
    pub fn kneser_ney(order: usize) -> Self {
        LmConfig {
            order,
            smoothing: Smoothing::KneserNey {
                discount: DEFAULT_DISCOUNT,
            },
        }
    }

    pub fn add_k(order: usize, k: f64) -> Self {
        LmConfig {
            order,
            smoothing: Smoothing::AddK { k },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 || self.order > MAX_ORDER {
            return Err(Error::Config(format!(
                "n-gram order {} outside 1..={MAX_ORDER}",
                self.order
            )));
        }
        match self.smoothing {
            Smoothing::KneserNey { discount } if !(discount > 0.0 && discount < 1.0) => {
                Err(Error::Config(format!("Kneser–Ney discount {discount} outside (0, 1)")))
            }
            Smoothing::AddK { k } if !(k > 0.0 && k.is_finite()) => {
                Err(Error::Config(format!("add-k constant {k} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ContextStats {
    total: u64,
    types: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct OrderTable {
    grams: FxHashMap<u128, u64>,
    contexts: FxHashMap<u128, ContextStats>,
}

/// Training state for one document: the last `order - 1` token ids.
#[derive(Debug, Clone)]
pub struct DocState {
    window: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    config: LmConfig,
    bits: u32,
    words: Vec<String>,
    ids: FxHashMap<String, u32>,
    tables: Vec<OrderTable>,
}

impl NGramModel {
    pub fn new(config: LmConfig) -> Result<Self> {
        config.validate()?;
        let bits = (128 / config.order as u32).min(32);
        let mut model = NGramModel {
            config,
            bits,
            words: Vec::new(),
            ids: FxHashMap::default(),
            tables: vec![OrderTable::default(); config.order],
        };
        for s in [UNK, BOS, EOS] {
            model.intern(s)?;
        }
        Ok(model)
    }

    pub fn config(&self) -> LmConfig {
        self.config
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    /// Predictable symbols: training words plus `</s>`, excluding unknown.
    pub fn vocab_size(&self) -> usize {
        self.words.len() - 2
    }

    pub fn is_trained(&self) -> bool {
        self.unigram_stats().total > 0
    }

    fn intern(&mut self, word: &str) -> Result<u32> {
        if let Some(&id) = self.ids.get(word) {
            return Ok(id);
        }
        let id = self.words.len() as u64;
        if self.bits < 32 && id >= (1u64 << self.bits) {
            return Err(Error::Config(format!(
                "vocabulary exceeds {} types supported at order {}",
                1u64 << self.bits,
                self.config.order
            )));
        }
        self.words.push(word.to_owned());
        self.ids.insert(word.to_owned(), id as u32);
        Ok(id as u32)
    }

    fn lookup(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(UNK_ID)
    }

    fn pack(&self, ids: &[u32]) -> u128 {
        ids.iter().fold(0u128, |acc, &id| (acc << self.bits) | id as u128)
    }

    fn unigram_stats(&self) -> ContextStats {
        self.tables[0].contexts.get(&0).copied().unwrap_or_default()
    }

    /// Increments the entry for `gram` at order `gram.len()`; returns whether
    /// the n-gram type is new.
    fn bump(&mut self, gram: &[u32], by: u64) -> bool {
        let m = gram.len();
        let key = self.pack(gram);
        let ctx_key = self.pack(&gram[..m - 1]);
        let table = &mut self.tables[m - 1];
        let count = table.grams.entry(key).or_insert(0);
        let is_new = *count == 0;
        *count += by;
        let ctx = table.contexts.entry(ctx_key).or_default();
        ctx.total += by;
        if is_new {
            ctx.types += 1;
        }
        is_new
    }

    /// Records one full-order n-gram occurrence.
    fn observe(&mut self, gram: &[u32], by: u64) {
        let n = gram.len();
        let mut is_new = self.bump(gram, by);
        let mut m = n;
        while is_new && m > 1 {
            m -= 1;
            is_new = self.bump(&gram[n - m..], 1);
        }
    }

    pub fn begin_document(&self) -> DocState {
        DocState {
            window: vec![BOS_ID; self.config.order - 1],
        }
    }

    fn push_id(&mut self, state: &mut DocState, id: u32) {
        state.window.push(id);
        let gram = std::mem::take(&mut state.window);
        self.observe(&gram, 1);
        state.window = gram;
        state.window.remove(0);
    }

    /// Trains on the next word of the current document.
    pub fn push_word(&mut self, state: &mut DocState, word: &str) -> Result<()> {
        let id = self.intern(word)?;
        self.push_id(state, id);
        Ok(())
    }

    /// Closes the document by training on `</s>`.
    pub fn end_document(&mut self, mut state: DocState) {
        self.push_id(&mut state, EOS_ID);
    }

    pub fn train_document(&mut self, text: &str) -> Result<()> {
        let mut state = self.begin_document();
        for w in text.split_whitespace() {
            self.push_word(&mut state, w)?;
        }
        self.end_document(state);
        Ok(())
    }

    /// Conditional probability of `word` after `context`; `context` is the
    /// preceding ids, of which the last `order - 1` are used.
    fn prob_ids(&self, context: &[u32], word: u32) -> f64 {
        let n = self.config.order;
        let ctx = &context[context.len().saturating_sub(n - 1)..];
        match self.config.smoothing {
            Smoothing::AddK { k } => {
                let h = &ctx[ctx.len().saturating_sub(n - 1)..];
                let mut gram = h.to_vec();
                gram.push(word);
                let table = &self.tables[n - 1];
                let c = table.grams.get(&self.pack(&gram)).copied().unwrap_or(0);
                let total = table.contexts.get(&self.pack(h)).map_or(0, |s| s.total);
                let v = (self.vocab_size() + 1) as f64;
                (c as f64 + k) / (total as f64 + k * v)
            }
            Smoothing::KneserNey { discount } => {
                let uni = self.unigram_stats();
                if uni.total == 0 {
                    return 0.0;
                }
                let total = uni.total as f64;
                let mut p = if word == UNK_ID {
                    discount * uni.types as f64 / total
                } else {
                    let c = self.tables[0].grams.get(&(word as u128)).copied().unwrap_or(0);
                    (c as f64 - discount).max(0.0) / total
                };
                let mut gram: Vec<u32> = Vec::with_capacity(n);
                for m in 2..=n.min(ctx.len() + 1) {
                    let h = &ctx[ctx.len() + 1 - m..];
                    let Some(stats) = self.tables[m - 1].contexts.get(&self.pack(h)) else {
                        continue;
                    };
                    if stats.total == 0 {
                        continue;
                    }
                    gram.clear();
                    gram.extend_from_slice(h);
                    gram.push(word);
                    let c = self.tables[m - 1].grams.get(&self.pack(&gram)).copied().unwrap_or(0);
                    p = ((c as f64 - discount).max(0.0) + discount * stats.types as f64 * p) / stats.total as f64;
                }
                p
            }
        }
    }

    /// Probability of `word` after the given context words. Unknown words map
    /// to the unknown symbol; `None` as the word means end of document.
    pub fn prob(&self, context: &[&str], word: Option<&str>) -> f64 {
        let mut ids = vec![BOS_ID; self.config.order.saturating_sub(1)];
        ids.extend(context.iter().map(|w| self.lookup(w)));
        let w = word.map_or(EOS_ID, |w| self.lookup(w));
        self.prob_ids(&ids, w)
    }

    /// Every predictable symbol, `None` standing for `</s>`, plus one entry
    /// for the unknown symbol (`Some("")` never occurs in training).
    pub fn predictable(&self) -> Vec<Option<String>> {
        let mut out: Vec<Option<String>> = self.words[3..].iter().cloned().map(Some).collect();
        out.push(None);
        out
    }

    /// Sum of natural-log probabilities and the number of scored tokens
    /// (words plus `</s>`).
    pub fn log_prob(&self, text: &str) -> Result<(f64, usize)> {
        if !self.is_trained() {
            return Err(Error::degenerate(MetricId::Perplexity, "model is untrained"));
        }
        let n = self.config.order;
        let mut ids = vec![BOS_ID; n - 1];
        ids.extend(text.split_whitespace().map(|w| self.lookup(w)));
        if ids.len() == n - 1 {
            return Err(Error::degenerate(MetricId::Perplexity, "no scorable tokens"));
        }
        ids.push(EOS_ID);
        let mut sum = 0.0;
        for i in n - 1..ids.len() {
            sum += self.prob_ids(&ids[i + 1 - n..i], ids[i]).ln();
        }
        Ok((sum, ids.len() - (n - 1)))
    }

    pub fn perplexity(&self, text: &str) -> Result<f64> {
        let (sum, count) = self.log_prob(text)?;
        Ok((-sum / count as f64).exp())
    }

    /// Text serialization: header, config, vocabulary in id order, then the
    /// highest-order counts sorted by key. Lower orders are rebuilt on load.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "order {}", self.config.order).unwrap();
        match self.config.smoothing {
            Smoothing::KneserNey { discount } => writeln!(out, "smoothing kneser_ney {discount:?}"),
            Smoothing::AddK { k } => writeln!(out, "smoothing add_k {k:?}"),
        }
        .unwrap();
        writeln!(out, "vocab {}", self.words.len() - 3).unwrap();
        for w in &self.words[3..] {
            writeln!(out, "{w}").unwrap();
        }
        let top = &self.tables[self.config.order - 1].grams;
        let mut grams: Vec<(u128, u64)> = top.iter().map(|(k, v)| (*k, *v)).collect();
        grams.sort_unstable();
        writeln!(out, "grams {}", grams.len()).unwrap();
        let mask = (1u128 << self.bits) - 1;
        let n = self.config.order;
        for (key, count) in grams {
            for i in (0..n).rev() {
                write!(out, "{} ", (key >> (i as u32 * self.bits)) & mask).unwrap();
            }
            writeln!(out, "{count}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::format("n-gram model", msg.to_owned());
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_HEADER) {
            return Err(bad("missing or unsupported version header"));
        }
        let mut field = |name: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{name}` line")))?;
            let mut parts = line.split(' ');
            if parts.next() != Some(name) {
                return Err(bad(&format!("expected `{name}` line")));
            }
            Ok(parts.map(str::to_owned).collect())
        };
        let order: usize = field("order")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad order"))?;
        let sm = field("smoothing")?;
        let param: f64 = sm
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad smoothing parameter"))?;
        let smoothing = match sm.first().map(String::as_str) {
            Some("kneser_ney") => Smoothing::KneserNey { discount: param },
            Some("add_k") => Smoothing::AddK { k: param },
            _ => return Err(bad("unknown smoothing")),
        };
        let vocab_len: usize = field("vocab")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad vocab size"))?;
        let mut model = NGramModel::new(LmConfig { order, smoothing })?;
        let mut lines = text.lines().skip(4);
        for _ in 0..vocab_len {
            let w = lines.next().ok_or_else(|| bad("truncated vocabulary"))?;
            model.intern(w)?;
        }
        let grams_line = lines.next().ok_or_else(|| bad("missing grams line"))?;
        let gram_count: usize = grams_line
            .strip_prefix("grams ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad grams line"))?;
        let max_id = model.words.len() as u128;
        let mut gram = Vec::with_capacity(order);
        for _ in 0..gram_count {
            let line = lines.next().ok_or_else(|| bad("truncated counts"))?;
            let nums: Vec<u128> = line
                .split(' ')
                .map(|s| s.parse().map_err(|_| bad("bad count line")))
                .collect::<Result<_>>()?;
            if nums.len() != order + 1 || nums[..order].iter().any(|&id| id >= max_id) || nums[order] == 0 {
                return Err(bad("bad count line"));
            }
            gram.clear();
            gram.extend(nums[..order].iter().map(|&id| id as u32));
            model.observe(&gram, nums[order] as u64);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::corpus::write_file(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Continuation counts recomputed from scratch: for each order `m < n`,
    /// the number of distinct `(m+1)`-gram types ending in each `m`-gram.
    #[cfg(test)]
    fn brute_force_continuations(&self) -> Vec<FxHashMap<u128, u64>> {
        use std::collections::HashSet;
        let n = self.config.order;
        let mask = (1u128 << self.bits) - 1;
        let unpack = |key: u128, len: usize| -> Vec<u32> {
            (0..len)
                .rev()
                .map(|i| ((key >> (i as u32 * self.bits)) & mask) as u32)
                .collect()
        };
        let top: Vec<Vec<u32>> = self.tables[n - 1].grams.keys().map(|k| unpack(*k, n)).collect();
        let mut out = vec![FxHashMap::default(); n];
        for m in 1..n {
            let exts: HashSet<Vec<u32>> = top.iter().map(|g| g[n - m - 1..].to_vec()).collect();
            for e in exts {
                *out[m - 1].entry(self.pack(&e[1..])).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Trains a fresh model on a document stream.
pub fn train_lm<'a>(docs: impl IntoIterator<Item = &'a str>, config: LmConfig) -> Result<NGramModel> {
    let mut model = NGramModel::new(config)?;
    let mut any = false;
    for d in docs {
        model.train_document(d)?;
        any = true;
    }
    if !any {
        return Err(Error::InsufficientData("no training documents".into()));
    }
    Ok(model)
}

/// Stream phase reserved for the scoring-slice draw.
const SLICE_PHASE: u32 = 0xffff_0002;

/// Trains the scoring model on a seeded uniform slice of `docs`:
/// `fraction` of the documents, at most `max_docs`, at least one.
pub fn train_on_slice(
    docs: &[Document],
    fraction: f64,
    max_docs: usize,
    seed: u64,
    config: LmConfig,
) -> Result<NGramModel> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("LM slice fraction {fraction} outside (0, 1]")));
    }
    let k = ((docs.len() as f64 * fraction).ceil() as usize)
        .clamp(1, max_docs.max(1))
        .min(docs.len());
    let mut picked = sample(&mut stream(seed, SLICE_PHASE, 0), docs.len(), k).into_vec();
    picked.sort_unstable();
    train_lm(picked.iter().map(|&i| docs[i].text.as_str()), config)
}

/// Resumes training an existing model on more documents.
pub fn resume_lm<'a>(model: &mut NGramModel, docs: impl IntoIterator<Item = &'a str>) -> Result<()> {
    for d in docs {
        model.train_document(d)?;
    }
    Ok(())
}
