//! Convergence probe: replays an order through an incremental n-gram model
//! and tracks held-out perplexity.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus::{canonical_json, write_file, Document};
use crate::lm::{LmConfig, NGramModel};
use crate::rng::stream;
use crate::{Error, Result};

pub const DEFAULT_PROBE_ORDER: usize = 3;

/// Stream phase reserved for the held-out draw.
const HELDOUT_PHASE: u32 = 0xffff_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Training tokens between checkpoints.
    pub checkpoint_tokens: u64,
    pub lm: LmConfig,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            checkpoint_tokens: 1000,
            lm: LmConfig::kneser_ney(DEFAULT_PROBE_ORDER),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub tokens_seen: u64,
    pub heldout_ppl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub plan_label: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn tokens(&self) -> Vec<u64> {
        self.checkpoints.iter().map(|c| c.tokens_seen).collect()
    }

    pub fn best(&self) -> Option<Checkpoint> {
        self.checkpoints
            .iter()
            .copied()
            .reduce(|a, b| if b.heldout_ppl < a.heldout_ppl { b } else { a })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tokens_seen,heldout_ppl\n");
        for c in &self.checkpoints {
            writeln!(out, "{},{:?}", c.tokens_seen, c.heldout_ppl).unwrap();
        }
        out
    }

    pub fn parse_csv(contents: &str, label: &str, seed: u64) -> Result<Self> {
        let bad = |msg: String| Error::format("trajectory csv", msg);
        let mut lines = contents.lines();
        if lines.next() != Some("tokens_seen,heldout_ppl") {
            return Err(bad("expected header `tokens_seen,heldout_ppl`".into()));
        }
        let checkpoints = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                let (a, b) = l.split_once(',').ok_or_else(|| bad(format!("bad line `{l}`")))?;
                Ok(Checkpoint {
                    tokens_seen: a.parse().map_err(|_| bad(format!("bad token count `{a}`")))?,
                    heldout_ppl: b.parse().map_err(|_| bad(format!("bad perplexity `{b}`")))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if checkpoints.windows(2).any(|w| w[1].tokens_seen <= w[0].tokens_seen) {
            return Err(bad("tokens_seen must be strictly increasing".into()));
        }
        Ok(Trajectory {
            checkpoints,
            plan_label: label.to_owned(),
            seed,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv().as_bytes())
    }
}

/// Which phase-one checkpoint a warmup continuation resumes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResumeFrom {
    /// Lowest held-out perplexity.
    Best,
    #[default]
    Last,
}

impl std::str::FromStr for ResumeFrom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" => Ok(ResumeFrom::Best),
            "last" => Ok(ResumeFrom::Last),
            _ => Err(Error::Config(format!(
                "resume point must be `best` or `last`, got `{s}`"
            ))),
        }
    }
}

/// Splits off `k` documents chosen uniformly by seed; both parts keep input
/// order.
pub fn heldout_split(docs: &[Document], k: usize, seed: u64) -> Result<(Vec<Document>, Vec<Document>)> {
    if k == 0 || k >= docs.len() {
        return Err(Error::Config(format!(
            "held-out size {k} must be between 1 and {} documents",
            docs.len().saturating_sub(1)
        )));
    }
    let mut chosen = vec![false; docs.len()];
    for i in sample(&mut stream(seed, HELDOUT_PHASE, 0), docs.len(), k) {
        chosen[i] = true;
    }
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (d, c) in docs.iter().zip(chosen) {
        if c {
            held.push(d.clone())
        } else {
            train.push(d.clone())
        }
    }
    Ok((train, held))
}

fn check_leakage(train: &[&[Document]], heldout: &[Document]) -> Result<()> {
    let held: HashSet<&str> = heldout.iter().map(|d| d.id.as_str()).collect();
    let shared: Vec<&str> = train
        .iter()
        .flat_map(|docs| docs.iter())
        .map(|d| d.id.as_str())
        .filter(|id| held.contains(id))
        .collect();
    match shared.first() {
        Some(first) => Err(Error::Leakage {
            count: shared.len(),
            first: (*first).to_owned(),
        }),
        None => Ok(()),
    }
}

/// Perplexity over the concatenated held-out documents.
pub fn heldout_perplexity(model: &NGramModel, heldout: &[Document]) -> Result<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for d in heldout {
        if d.text.split_whitespace().next().is_none() {
            continue;
        }
        let (s, c) = model.log_prob(&d.text)?;
        sum += s;
        count += c;
    }
    if count == 0 {
        return Err(Error::InsufficientData("held-out set has no tokens".into()));
    }
    Ok((-sum / count as f64).exp())
}

struct Replay<'a> {
    model: NGramModel,
    seen: u64,
    cfg: &'a ProbeConfig,
    heldout: &'a [Document],
    checkpoints: Vec<Checkpoint>,
}

impl Replay<'_> {
    /// Trains word by word, checkpointing at multiples of the interval. Stops
    /// mid-document once `limit` tokens have been seen.
    fn feed(&mut self, docs: &[Document], limit: Option<u64>) -> Result<()> {
        for d in docs {
            let mut state = self.model.begin_document();
            for w in d.text.split_whitespace() {
                if limit.is_some_and(|l| self.seen >= l) {
                    return Ok(());
                }
                self.model.push_word(&mut state, w)?;
                self.seen += 1;
                if self.seen.is_multiple_of(self.cfg.checkpoint_tokens) {
                    self.checkpoint()?;
                }
            }
            self.model.end_document(state);
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<()> {
        let ppl = heldout_perplexity(&self.model, self.heldout)?;
        self.checkpoints.push(Checkpoint {
            tokens_seen: self.seen,
            heldout_ppl: ppl,
        });
        Ok(())
    }

    fn finish(mut self, label: &str) -> Result<Trajectory> {
        if self.seen == 0 {
            return Err(Error::InsufficientData("probe order has no training tokens".into()));
        }
        if self.checkpoints.last().map(|c| c.tokens_seen) != Some(self.seen) {
            self.checkpoint()?;
        }
        Ok(Trajectory {
            checkpoints: self.checkpoints,
            plan_label: label.to_owned(),
            seed: self.cfg.seed,
        })
    }
}

fn start<'a>(cfg: &'a ProbeConfig, heldout: &'a [Document]) -> Result<Replay<'a>> {
    if cfg.checkpoint_tokens == 0 {
        return Err(Error::Config("checkpoint interval must be positive".into()));
    }
    Ok(Replay {
        model: NGramModel::new(cfg.lm)?,
        seen: 0,
        cfg,
        heldout,
        checkpoints: Vec::new(),
    })
}

/// Trains along `train` in order and records held-out perplexity every
/// `checkpoint_tokens` whitespace tokens, plus a final partial checkpoint.
pub fn run_probe(train: &[Document], heldout: &[Document], cfg: &ProbeConfig, label: &str) -> Result<Trajectory> {
    check_leakage(&[train], heldout)?;
    let mut r = start(cfg, heldout)?;
    r.feed(train, None)?;
    r.finish(label)
}

/// Probe for a two-phase order: the continuation resumes from the best or
/// the last phase-one checkpoint.
pub fn run_warmup_probe(
    phase1: &[Document],
    phase2: &[Document],
    heldout: &[Document],
    cfg: &ProbeConfig,
    resume: ResumeFrom,
    label: &str,
) -> Result<Trajectory> {
    check_leakage(&[phase1, phase2], heldout)?;
    let mut r = start(cfg, heldout)?;
    r.feed(phase1, None)?;
    if r.seen == 0 {
        return Err(Error::InsufficientData("warmup phase has no training tokens".into()));
    }
    if r.checkpoints.last().map(|c| c.tokens_seen) != Some(r.seen) {
        r.checkpoint()?;
    }
    if resume == ResumeFrom::Best {
        let best = Trajectory {
            checkpoints: r.checkpoints.clone(),
            plan_label: String::new(),
            seed: 0,
        }
        .best()
        .expect("at least one checkpoint");
        if best.tokens_seen < r.seen {
            let kept: Vec<Checkpoint> = r
                .checkpoints
                .iter()
                .copied()
                .filter(|c| c.tokens_seen <= best.tokens_seen)
                .collect();
            r = start(cfg, heldout)?;
            r.feed(phase1, Some(best.tokens_seen))?;
            r.checkpoints = kept;
        }
    }
    r.feed(phase2, None)?;
    r.finish(label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub cl_label: String,
    pub baseline_label: String,
    pub baseline_best: f64,
    pub baseline_steps_to_own_best: u64,
    /// First checkpoint where the curriculum matches `baseline_best`.
    pub cl_steps_to_baseline_best: Option<u64>,
    /// `(baseline_steps − cl_steps) / baseline_steps`; absent when the
    /// curriculum never matches.
    pub savings_fraction: Option<f64>,
    pub not_reached_reason: Option<String>,
    /// Smallest `cl_ppl − baseline_best` when the target is not reached.
    pub closest_gap: Option<f64>,
    pub final_delta: f64,
}

impl SavingsReport {
    pub fn to_json(&self) -> String {
        canonical_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }
}

/// Steps-to-baseline statistic on perplexity (lower is better).
pub fn savings(cl: &Trajectory, baseline: &Trajectory) -> Result<SavingsReport> {
    if cl.checkpoints.is_empty() || baseline.checkpoints.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    if cl.tokens() != baseline.tokens() {
        return Err(Error::Config("trajectories do not share a checkpoint grid".into()));
    }
    let best = baseline.best().expect("non-empty");
    let reached = cl.checkpoints.iter().find(|c| c.heldout_ppl <= best.heldout_ppl);
    let base_steps = best.tokens_seen as f64;
    let (cl_steps, fraction, reason, gap) = match reached {
        Some(c) => (
            Some(c.tokens_seen),
            Some((base_steps - c.tokens_seen as f64) / base_steps),
            None,
            None,
        ),
        None => {
            let gap = cl
                .checkpoints
                .iter()
                .map(|c| c.heldout_ppl - best.heldout_ppl)
                .fold(f64::INFINITY, f64::min);
            (
                None,
                None,
                Some(format!(
                    "curriculum never reached the baseline best perplexity {:.6}",
                    best.heldout_ppl
                )),
                Some(gap),
            )
        }
    };
    let bf = baseline.checkpoints.last().unwrap().heldout_ppl;
    let cf = cl.checkpoints.last().unwrap().heldout_ppl;
    Ok(SavingsReport {
        cl_label: cl.plan_label.clone(),
        baseline_label: baseline.plan_label.clone(),
        baseline_best: best.heldout_ppl,
        baseline_steps_to_own_best: best.tokens_seen,
        cl_steps_to_baseline_best: cl_steps,
        savings_fraction: fraction,
        not_reached_reason: reason,
        closest_gap: gap,
        final_delta: (bf - cf) / bf,
    })
}
