//! Materializes curriculum plans into deterministic document orders.

mod shards;

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{canonical_json, write_file, ScoreTable};
use crate::metrics::{MetricId, PolarityMap};
use crate::rng::{derive_seed, stream};
use crate::scheduler::{
    interleave_allocation, make_groups, normalize_difficulty, pacing_allocation, Allocation, CurriculumPlan,
    DifficultyGrouping, PlanFile, RankedDoc, Strategy,
};
use crate::{Error, Result};

pub use shards::{emit_shards, read_shards, SHARD_MANIFEST};

/// Start of one non-empty cell of the realized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseMark {
    pub phase: u32,
    pub interleave: u32,
    pub group: u32,
    /// Index into the sequence of the cell's first document.
    pub start: usize,
    /// Tokens before the cell.
    pub offset: u64,
    pub target_tokens: u64,
    pub realized_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderManifest {
    pub plan: CurriculumPlan,
    pub sequence: Vec<String>,
    pub token_counts: Vec<u64>,
    pub phase_marks: Vec<PhaseMark>,
    pub total_tokens: u64,
    pub seed: u64,
    pub order_hash: String,
    /// Order hash of the manifest this one was derived from by
    /// [`prefix_shuffle`].
    pub ablation_of: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    ablation_of: Option<String>,
    order_hash: String,
    phase_marks: Vec<PhaseMark>,
    plan: PlanFile,
    seed: u64,
    sequence: Vec<String>,
    token_counts: Vec<u64>,
    total_tokens: u64,
}

/// SHA-256 over the ids joined by LF.
pub fn order_hash<S: AsRef<str>>(ids: &[S]) -> String {
    let mut h = Sha256::new();
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(id.as_ref().as_bytes());
    }
    hex::encode(h.finalize())
}

impl OrderManifest {
    fn assemble(plan: CurriculumPlan, seed: u64, picked: Vec<(String, u64)>, phase_marks: Vec<PhaseMark>) -> Self {
        let (sequence, token_counts): (Vec<String>, Vec<u64>) = picked.into_iter().unzip();
        let total_tokens = token_counts.iter().sum();
        let order_hash = order_hash(&sequence);
        OrderManifest {
            plan,
            sequence,
            token_counts,
            phase_marks,
            total_tokens,
            seed,
            order_hash,
            ablation_of: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Sequence index range covered by each phase mark.
    pub fn cell_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.phase_marks.len());
        for (k, m) in self.phase_marks.iter().enumerate() {
            let end = self.phase_marks.get(k + 1).map_or(self.sequence.len(), |n| n.start);
            out.push(m.start..end);
        }
        out
    }

    /// Document ids of one warmup phase (or of the whole order for
    /// single-phase plans when `phase == 0`).
    pub fn phase_ids(&self, phase: u32) -> Vec<&str> {
        self.phase_marks
            .iter()
            .zip(self.cell_ranges())
            .filter(|(m, _)| m.phase == phase)
            .flat_map(|(_, r)| self.sequence[r].iter().map(String::as_str))
            .collect()
    }

    /// Checks the structural invariants of the manifest.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Integrity(format!("order manifest: {msg}")));
        if self.sequence.len() != self.token_counts.len() {
            return fail("sequence and token counts differ in length".into());
        }
        let mut seen = HashSet::with_capacity(self.sequence.len());
        if let Some(dup) = self.sequence.iter().find(|id| !seen.insert(id.as_str())) {
            return fail(format!("document `{dup}` appears twice"));
        }
        if self.token_counts.iter().sum::<u64>() != self.total_tokens {
            return fail("total_tokens does not match token counts".into());
        }
        if order_hash(&self.sequence) != self.order_hash {
            return fail("order_hash does not match sequence".into());
        }
        if self.ablation_of.is_none() {
            if let Some(t) = self.plan.budget {
                if self.total_tokens > t {
                    return fail(format!("{} tokens exceed budget {t}", self.total_tokens));
                }
            }
        }
        if !self.sequence.is_empty() && self.phase_marks.first().map(|m| (m.start, m.offset)) != Some((0, 0)) {
            return fail("first phase mark must start at 0".into());
        }
        for w in self.phase_marks.windows(2) {
            if w[1].start <= w[0].start || w[1].offset <= w[0].offset {
                return fail("phase marks are not strictly increasing".into());
            }
        }
        for (m, r) in self.phase_marks.iter().zip(self.cell_ranges()) {
            if r.start > self.sequence.len() || self.token_counts[r].iter().sum::<u64>() != m.realized_tokens {
                return fail(format!(
                    "cell starting at {} disagrees with its realized tokens",
                    m.start
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        canonical_json(&ManifestFile {
            ablation_of: self.ablation_of.clone(),
            order_hash: self.order_hash.clone(),
            phase_marks: self.phase_marks.clone(),
            plan: self.plan.to_file(),
            seed: self.seed,
            sequence: self.sequence.clone(),
            token_counts: self.token_counts.clone(),
            total_tokens: self.total_tokens,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ManifestFile = serde_json::from_str(s).map_err(|e| Error::format("order manifest", e.to_string()))?;
        let m = OrderManifest {
            plan: CurriculumPlan::from_file_unchecked(&f.plan)?,
            sequence: f.sequence,
            token_counts: f.token_counts,
            phase_marks: f.phase_marks,
            total_tokens: f.total_tokens,
            seed: f.seed,
            order_hash: f.order_hash,
            ablation_of: f.ablation_of,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn single_mark(phase: u32, picked: &[(String, u64)], target: u64) -> Vec<PhaseMark> {
    if picked.is_empty() {
        return Vec::new();
    }
    vec![PhaseMark {
        phase,
        interleave: 0,
        group: 0,
        start: 0,
        offset: 0,
        target_tokens: target,
        realized_tokens: picked.iter().map(|p| p.1).sum(),
    }]
}

/// Takes documents in order while the next one fits the remaining budget.
fn take_fitting<'a>(docs: impl IntoIterator<Item = &'a RankedDoc>, budget: Option<u64>) -> Vec<(String, u64)> {
    let mut left = budget.unwrap_or(u64::MAX);
    let mut out = Vec::new();
    for d in docs {
        if d.tokens > left {
            break;
        }
        left -= d.tokens;
        out.push((d.id.clone(), d.tokens));
    }
    out
}

/// Strict easy-to-hard order truncated at the budget. The seed is recorded
/// but unused.
pub fn build_vanilla(ordered: &[RankedDoc], metric: MetricId, budget: Option<u64>, seed: u64) -> Result<OrderManifest> {
    if ordered.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let picked = take_fitting(ordered, budget);
    let total = budget.unwrap_or_else(|| ordered.iter().map(|d| d.tokens).sum());
    let marks = single_mark(0, &picked, total);
    let mut plan = CurriculumPlan::vanilla(metric, budget);
    plan.seed = seed;
    Ok(OrderManifest::assemble(plan, seed, picked, marks))
}

/// Seeded uniform permutation of the documents truncated at the budget.
pub fn build_shuffled_baseline(docs: &[RankedDoc], budget: Option<u64>, seed: u64) -> Result<OrderManifest> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut pool: Vec<&RankedDoc> = docs.iter().collect();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool.shuffle(&mut stream(seed, 0, 0));
    let picked = take_fitting(pool, budget);
    let target = budget.unwrap_or_else(|| docs.iter().map(|d| d.tokens).sum());
    let marks = single_mark(0, &picked, target);
    Ok(OrderManifest::assemble(
        CurriculumPlan::shuffled_baseline(budget, seed),
        seed,
        picked,
        marks,
    ))
}

pub fn build_paced(grouping: &DifficultyGrouping, allocation: &Allocation, seed: u64) -> Result<OrderManifest> {
    build_cells(grouping, std::slice::from_ref(allocation), seed)
}

pub fn build_interleaved(
    grouping: &DifficultyGrouping,
    allocations: &[Allocation],
    seed: u64,
) -> Result<OrderManifest> {
    build_cells(grouping, allocations, seed)
}

/// Draws cells interleave by interleave, groups easy to hard.
///
/// Each group's documents are shuffled once with the stream for
/// `(seed, group)` and consumed front to back across interleaves, so no
/// document is drawn twice. A cell takes documents while the next one fits
/// its target plus the carry left by earlier cells; whatever it leaves unused
/// (including the deficit of an exhausted group) carries forward.
fn build_cells(grouping: &DifficultyGrouping, allocations: &[Allocation], seed: u64) -> Result<OrderManifest> {
    let n = grouping.n();
    if allocations.is_empty() {
        return Err(Error::Config("no allocations to build".into()));
    }
    if let Some(a) = allocations.iter().find(|a| a.n() != n) {
        return Err(Error::Config(format!(
            "allocation has {} groups but the grouping has {n}",
            a.n()
        )));
    }
    let queues: Vec<Vec<&RankedDoc>> = grouping
        .groups
        .par_iter()
        .enumerate()
        .map(|(g, docs)| {
            let mut q: Vec<&RankedDoc> = docs.iter().collect();
            q.sort_by(|a, b| a.id.cmp(&b.id));
            q.shuffle(&mut stream(seed, 0, g as u32));
            q
        })
        .collect();
    let mut cursor = vec![0usize; n];
    let mut picked: Vec<(String, u64)> = Vec::new();
    let mut marks = Vec::new();
    let mut carry: u64 = 0;
    let mut offset: u64 = 0;
    for (j, alloc) in allocations.iter().enumerate() {
        for (g, &target) in alloc.tokens_per_group.iter().enumerate() {
            let budget = target.saturating_add(carry);
            let start = picked.len();
            let mut realized = 0u64;
            let q = &queues[g];
            while let Some(d) = q.get(cursor[g]) {
                if realized + d.tokens > budget {
                    break;
                }
                realized += d.tokens;
                picked.push((d.id.clone(), d.tokens));
                cursor[g] += 1;
            }
            if cursor[g] == q.len() && realized < budget && target > 0 {
                log::warn!(
                    "group {} exhausted in interleave {}: {realized} of {budget} tokens; deficit carried forward",
                    g + 1,
                    j + 1
                );
            }
            carry = budget - realized;
            if realized > 0 {
                marks.push(PhaseMark {
                    phase: 0,
                    interleave: j as u32,
                    group: g as u32,
                    start,
                    offset,
                    target_tokens: target,
                    realized_tokens: realized,
                });
            }
            offset += realized;
        }
    }
    if carry > 0 {
        log::info!("{carry} token(s) of budget left unfilled");
    }
    let total: u64 = allocations.iter().map(|a| a.total).sum();
    let strategy = if allocations.len() == 1 {
        Strategy::Paced {
            pacing: crate::scheduler::PacingKind::Linear,
            groups: n,
        }
    } else {
        Strategy::Interleaved {
            groups: n,
            interleaves: allocations.len(),
        }
    };
    let mut plan = CurriculumPlan::new(strategy, grouping.metric, seed, Some(total));
    plan.grouping_mode = grouping.mode;
    Ok(OrderManifest::assemble(plan, seed, picked, marks))
}

/// Shuffles the shortest prefix covering `cut_tokens`.
pub fn prefix_shuffle(manifest: &OrderManifest, cut_tokens: u64, seed: u64) -> Result<OrderManifest> {
    if cut_tokens == 0 || cut_tokens > manifest.total_tokens {
        return Err(Error::Range(format!(
            "cut at {cut_tokens} tokens outside 1..={}",
            manifest.total_tokens
        )));
    }
    let mut cum = 0u64;
    let mut len = 0;
    while cum < cut_tokens {
        cum += manifest.token_counts[len];
        len += 1;
    }
    let mut prefix: Vec<(String, u64)> = manifest.sequence[..len]
        .iter()
        .cloned()
        .zip(manifest.token_counts[..len].iter().copied())
        .collect();
    prefix.shuffle(&mut stream(seed, 0, 0));
    let marks = single_mark(0, &prefix, cut_tokens);
    let mut out = OrderManifest::assemble(manifest.plan.clone(), seed, prefix, marks);
    out.ablation_of = Some(manifest.order_hash.clone());
    Ok(out)
}

/// Every scored document as an unordered pool.
pub fn pool_from_table(table: &ScoreTable) -> Vec<RankedDoc> {
    table
        .rows()
        .iter()
        .map(|r| RankedDoc {
            id: r.id.clone(),
            difficulty: 0.0,
            tokens: r.token_count,
        })
        .collect()
}

/// Plans and builds `plan` over a score table.
pub fn build(plan: &CurriculumPlan, table: &ScoreTable) -> Result<OrderManifest> {
    plan.validate()?;
    let mut polarity = PolarityMap::default();
    if let (Some(m), Some(p)) = (plan.metric, plan.polarity) {
        polarity = polarity.with_override(m, p);
    }
    let ordered = || -> Result<Vec<RankedDoc>> {
        let m = plan.metric.expect("validated plan has a metric");
        let docs = normalize_difficulty(table, m, &polarity)?;
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(docs)
    };
    let mut manifest = match &plan.strategy {
        Strategy::Vanilla => build_vanilla(&ordered()?, plan.metric.unwrap(), plan.budget, plan.seed)?,
        Strategy::ShuffledBaseline => build_shuffled_baseline(&pool_from_table(table), plan.budget, plan.seed)?,
        Strategy::Paced { pacing, groups } => {
            let grouping = make_groups(ordered()?, *groups, plan.grouping_mode, plan.metric)?;
            let alloc = pacing_allocation(*pacing, *groups, plan.budget.expect("validated"))?;
            build_paced(&grouping, &alloc, plan.seed)?
        }
        Strategy::Interleaved { groups, interleaves } => {
            let grouping = make_groups(ordered()?, *groups, plan.grouping_mode, plan.metric)?;
            let allocs = interleave_allocation(*groups, *interleaves, plan.budget.expect("validated"))?;
            build_interleaved(&grouping, &allocs, plan.seed)?
        }
        Strategy::Warmup {
            inner,
            continuation_tokens,
            ..
        } => {
            let first = build(inner, table)?;
            let used: HashSet<&str> = first.sequence.iter().map(String::as_str).collect();
            let rest: Vec<RankedDoc> = pool_from_table(table)
                .into_iter()
                .filter(|d| !used.contains(d.id.as_str()))
                .collect();
            if rest.is_empty() {
                return Err(Error::InsufficientData(
                    "warmup phase used every document; nothing left for the continuation".into(),
                ));
            }
            let second = build_shuffled_baseline(&rest, Some(*continuation_tokens), derive_seed(plan.seed, 1))?;
            concat_phases(first, second)
        }
    };
    manifest.plan = plan.clone();
    manifest.seed = plan.seed;
    Ok(manifest)
}

fn concat_phases(first: OrderManifest, second: OrderManifest) -> OrderManifest {
    let mut marks = first.phase_marks;
    let base_start = first.sequence.len();
    let base_offset = first.total_tokens;
    marks.extend(second.phase_marks.into_iter().map(|m| PhaseMark {
        phase: 1,
        start: m.start + base_start,
        offset: m.offset + base_offset,
        ..m
    }));
    let picked: Vec<(String, u64)> = first
        .sequence
        .into_iter()
        .chain(second.sequence)
        .zip(first.token_counts.into_iter().chain(second.token_counts))
        .collect();
    OrderManifest::assemble(first.plan, first.seed, picked, marks)
}

#[cfg(test)]
mod tests;
