use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use curricula::analysis::{correlation_matrix, export_heatmap_csv};
use curricula::builder::{build, emit_shards, OrderManifest, SHARD_MANIFEST};
use curricula::corpus::{ingest, read_jsonl, read_scores, write_scores, Corpus, Document};
use curricula::lm::{train_on_slice, LmConfig, NGramModel};
use curricula::metrics::{score_corpus, MetricId, ScoringContext, TimingReport, Tokenizer, TokenizerSpec, WordList};
use curricula::probe::{heldout_split, run_probe, run_warmup_probe, savings, ProbeConfig, ResumeFrom, Trajectory};
use curricula::scheduler::{CurriculumPlan, PlanFile, Strategy};

use crate::args::*;
use crate::record::{RunLog, RunRecord};
use crate::Failure;

fn tokenizer_spec(a: &TokenizerArgs) -> Result<TokenizerSpec, Failure> {
    let spec = match a.tokenizer.as_str() {
        "whitespace" => TokenizerSpec::whitespace(),
        "bpe" => TokenizerSpec {
            kind: curricula::metrics::TokenizerKind::Bpe,
            vocab_path: a.bpe_vocab.clone(),
            merges_path: a.bpe_merges.clone(),
        },
        other => return Err(Failure::Config(format!("unknown tokenizer `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn load_corpus(log: &mut RunLog, paths: &[PathBuf], tokenizer: &Tokenizer) -> Result<Corpus, Failure> {
    for p in paths {
        log.input(p)?;
    }
    Ok(ingest(paths, tokenizer)?)
}

pub fn score(a: &ScoreArgs, log: &mut RunLog) -> Result<(), Failure> {
    let spec = tokenizer_spec(&a.tokenizer)?;
    for p in spec.vocab_path.iter().chain(&spec.merges_path) {
        log.input(p)?;
    }
    let tokenizer = spec.load()?;
    let metrics = MetricId::parse_list(&a.metrics)?;
    let corpus = load_corpus(log, &a.corpus, &tokenizer)?;

    let mut ctx = ScoringContext::new(tokenizer);
    if let Some(p) = &a.dale_chall {
        log.input(p)?;
        ctx.dale_chall = Some(Arc::new(WordList::load(p)?));
    }
    if metrics.contains(&MetricId::Perplexity) {
        let model = match &a.lm {
            Some(p) => {
                log.input(p)?;
                NGramModel::load(p)?
            }
            None => {
                let m = train_on_slice(
                    &corpus.documents,
                    a.lm_fraction,
                    a.lm_max_docs,
                    log.seed,
                    LmConfig::kneser_ney(a.lm_order),
                )?;
                m.save(&log.path("lm.ngram"))?;
                log.recorded("lm.ngram")?;
                m
            }
        };
        ctx = ctx.with_lm(model);
    } else if a.lm.is_some() {
        return Err(Failure::Config(
            "--lm given but perplexity is not among the metrics".into(),
        ));
    }

    let run = score_corpus(&corpus.documents, &metrics, &ctx)?;
    write_scores(&run.table, &log.path("scores.csv"))?;
    log.recorded("scores.csv")?;
    log.write("score_errors.csv", run.errors_csv().as_bytes())?;
    log.write("corpus_manifest.json", corpus.manifest.to_json().as_bytes())?;
    log.write_volatile("timing.csv", run.timing.to_csv().as_bytes())?;
    println!(
        "scored {} documents on {} metrics ({} failed cells) -> {}",
        run.table.len(),
        metrics.len(),
        run.errors.len(),
        log.path("scores.csv").display()
    );
    Ok(())
}

pub fn correlate(a: &CorrelateArgs, log: &mut RunLog) -> Result<(), Failure> {
    log.input(&a.scores)?;
    let mut table = read_scores(&a.scores)?;
    if let Some(k) = a.sample_docs {
        if k == 0 {
            return Err(Failure::Config("--sample-docs must be positive".into()));
        }
        table = table.sample(k, log.seed);
    }
    let metrics = match &a.metrics {
        Some(s) => MetricId::parse_list(s)?,
        None => table.metrics().to_vec(),
    };
    let cm = correlation_matrix::<f64>(&table, &metrics)?;
    export_heatmap_csv(&cm, &log.path("correlation.csv"))?;
    log.recorded("correlation.csv")?;
    log.write("correlation.json", cm.to_json().as_bytes())?;
    println!(
        "{}x{} Spearman matrix over {} documents -> {}",
        cm.len(),
        cm.len(),
        cm.rows_used,
        log.path("correlation.csv").display()
    );
    Ok(())
}

pub fn plan(a: &PlanArgs, log: &mut RunLog) -> Result<(), Failure> {
    let file = PlanFile {
        strategy: a.strategy.clone(),
        metric_id: a.metric.as_deref().map(str::parse).transpose()?,
        n: a.n,
        i: a.i,
        pacing: a.pacing.as_deref().map(str::parse).transpose()?,
        seed: log.seed,
        t: a.t,
        t1: a.t1,
        t2: a.t2,
        grouping_mode: a.grouping_mode.parse()?,
        inner_strategy: a.inner_strategy.clone(),
        polarity: a.polarity.as_deref().map(str::parse).transpose()?,
    };
    let plan = CurriculumPlan::from_file(&file)?;
    log.write("plan.json", plan.to_json().as_bytes())?;
    println!("{} -> {}", plan.label(), log.path("plan.json").display());
    Ok(())
}

fn cells_csv(m: &OrderManifest) -> String {
    let mut out = String::from("phase,interleave,group,start,docs,target_tokens,realized_tokens\n");
    for (mark, r) in m.phase_marks.iter().zip(m.cell_ranges()) {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            mark.phase,
            mark.interleave,
            mark.group,
            mark.start,
            r.len(),
            mark.target_tokens,
            mark.realized_tokens
        )
        .unwrap();
    }
    out
}

pub fn build_cmd(a: &BuildArgs, log: &mut RunLog) -> Result<(), Failure> {
    log.input(&a.plan)?;
    log.input(&a.scores)?;
    let plan = CurriculumPlan::load(&a.plan)?;
    let table = read_scores(&a.scores)?;
    let m = build(&plan, &table)?;
    m.validate()?;
    m.save(&log.path("order_manifest.json"))?;
    log.recorded("order_manifest.json")?;
    let cells = cells_csv(&m);
    log.write("cells.csv", cells.as_bytes())?;
    if !a.corpus.is_empty() {
        let corpus = load_corpus(log, &a.corpus, &Tokenizer::Whitespace)?;
        let dir = log.path("shards");
        for p in emit_shards(&m, &corpus.documents, a.shard_tokens, &dir)? {
            log.recorded_path(&p)?;
        }
        log.recorded_path(&dir.join(SHARD_MANIFEST))?;
    }
    println!(
        "{}: {} documents, {} tokens, order {}",
        plan.label(),
        m.len(),
        m.total_tokens,
        &m.order_hash[..16]
    );
    print!("{cells}");
    Ok(())
}

/// An order as documents, from a manifest plus corpus or a shard directory.
fn load_order(
    log: &mut RunLog,
    path: &Path,
    corpus: Option<&Corpus>,
) -> Result<(OrderManifest, Vec<Document>), Failure> {
    if path.is_dir() {
        let sidecar = path.join(SHARD_MANIFEST);
        log.input(&sidecar)?;
        let m = OrderManifest::load(&sidecar)?;
        let mut shards: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| curricula::Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        shards.sort();
        let mut docs = Vec::new();
        for s in &shards {
            log.input(s)?;
            docs.extend(read_jsonl(s)?);
        }
        let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        if ids != m.sequence {
            return Err(Failure::Integrity(format!(
                "shards in {} do not match their manifest",
                path.display()
            )));
        }
        return Ok((m, docs));
    }
    log.input(path)?;
    let m = OrderManifest::load(path)?;
    let corpus = corpus.ok_or_else(|| Failure::Config("--corpus is required with a manifest file".into()))?;
    let index = corpus.index();
    let docs = m
        .sequence
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|&i| corpus.documents[i].clone())
                .ok_or_else(|| Failure::Integrity(format!("document `{id}` from the manifest is not in the corpus")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((m, docs))
}

fn probe_one(
    m: &OrderManifest,
    docs: Vec<Document>,
    heldout: &[Document],
    cfg: &ProbeConfig,
    resume: ResumeFrom,
) -> Result<Trajectory, Failure> {
    let held: HashSet<&str> = heldout.iter().map(|d| d.id.as_str()).collect();
    let label = m.plan.label();
    let phase1_len = match m.plan.strategy {
        Strategy::Warmup { .. } => Some(m.phase_ids(0).len()),
        _ => None,
    };
    let keep = |d: &Document| !held.contains(d.id.as_str());
    let dropped = docs.iter().filter(|d| !keep(d)).count();
    if dropped > 0 {
        log::warn!("{label}: {dropped} held-out document(s) removed from the training order");
    }
    let t = match phase1_len {
        Some(n) => {
            let (p1, p2) = docs.split_at(n);
            let p1: Vec<Document> = p1.iter().filter(|d| keep(d)).cloned().collect();
            let p2: Vec<Document> = p2.iter().filter(|d| keep(d)).cloned().collect();
            run_warmup_probe(&p1, &p2, heldout, cfg, resume, &label)?
        }
        None => {
            let train: Vec<Document> = docs.into_iter().filter(keep).collect();
            run_probe(&train, heldout, cfg, &label)?
        }
    };
    Ok(t)
}

/// Restricts both trajectories to the checkpoints they share.
fn common_grid(a: &Trajectory, b: &Trajectory) -> (Trajectory, Trajectory) {
    let ta: HashSet<u64> = a.tokens().into_iter().collect();
    let tb: HashSet<u64> = b.tokens().into_iter().collect();
    let keep = |t: &Trajectory, other: &HashSet<u64>| Trajectory {
        checkpoints: t
            .checkpoints
            .iter()
            .copied()
            .filter(|c| other.contains(&c.tokens_seen))
            .collect(),
        ..t.clone()
    };
    let (a2, b2) = (keep(a, &tb), keep(b, &ta));
    if a2.checkpoints.len() != a.checkpoints.len() || b2.checkpoints.len() != b.checkpoints.len() {
        log::warn!(
            "checkpoint grids differ; savings use the {} shared checkpoints",
            a2.checkpoints.len()
        );
    }
    (a2, b2)
}

pub fn probe(a: &ProbeArgs, log: &mut RunLog) -> Result<(), Failure> {
    let resume: ResumeFrom = a.resume.parse()?;
    let corpus = if a.corpus.is_empty() {
        None
    } else {
        Some(load_corpus(log, &a.corpus, &Tokenizer::Whitespace)?)
    };
    let heldout = match (&a.heldout, &corpus) {
        (Some(p), _) => {
            log.input(p)?;
            read_jsonl(p)?
        }
        (None, Some(c)) => heldout_split(&c.documents, a.heldout_docs, log.seed)?.1,
        (None, None) => {
            return Err(Failure::Config(
                "need --heldout or --corpus to draw held-out documents".into(),
            ));
        }
    };
    let cfg = ProbeConfig {
        checkpoint_tokens: a.checkpoint_tokens,
        lm: LmConfig::kneser_ney(a.probe_order),
        seed: log.seed,
    };
    let (m, docs) = load_order(log, &a.order, corpus.as_ref())?;
    let traj = probe_one(&m, docs, &heldout, &cfg, resume)?;
    log.write("trajectory.csv", traj.to_csv().as_bytes())?;
    let last = traj.checkpoints.last().expect("non-empty trajectory");
    println!(
        "{}: {} checkpoints, final held-out perplexity {:.3} at {} tokens",
        traj.plan_label,
        traj.checkpoints.len(),
        last.heldout_ppl,
        last.tokens_seen
    );

    if let Some(b) = &a.baseline {
        let (bm, bdocs) = load_order(log, b, corpus.as_ref())?;
        let base = probe_one(&bm, bdocs, &heldout, &cfg, resume)?;
        log.write("baseline_trajectory.csv", base.to_csv().as_bytes())?;
        let (cl, base) = common_grid(&traj, &base);
        let report = savings(&cl, &base)?;
        log.write("savings.json", report.to_json().as_bytes())?;
        match report.savings_fraction {
            Some(s) => println!(
                "reaches baseline best {:.3} after {} of {} tokens: savings {:.1}%",
                report.baseline_best,
                report.cl_steps_to_baseline_best.unwrap_or_default(),
                report.baseline_steps_to_own_best,
                100.0 * s
            ),
            None => println!(
                "never reaches baseline best {:.3} (closest gap {:.3})",
                report.baseline_best,
                report.closest_gap.unwrap_or(f64::NAN)
            ),
        }
    }
    Ok(())
}

fn half_minutes(seconds: f64) -> f64 {
    (seconds / 30.0).round() / 2.0
}

pub fn report(a: &ReportArgs, log: &mut RunLog) -> Result<(), Failure> {
    if a.timing.is_empty() && a.runs.is_empty() {
        return Err(Failure::Config("report needs --timing or --runs".into()));
    }
    // (stage, docs, seconds)
    let mut rows: Vec<(String, Option<usize>, f64)> = Vec::new();
    for p in &a.timing {
        log.input(p)?;
        let text = std::fs::read_to_string(p).map_err(|e| curricula::Error::io(p, e))?;
        let t = TimingReport::parse_csv(&text)?;
        rows.extend(t.rows.into_iter().map(|r| (r.label, Some(r.docs), r.seconds)));
    }
    for p in &a.runs {
        log.input(p)?;
        let r = RunRecord::load(p)?;
        rows.push((format!("run:{}", r.command.name()), None, r.elapsed_seconds));
    }

    let mut csv = String::from("stage,docs,seconds,minutes,cost\n");
    let mut table = format!(
        "{:<24} {:>10} {:>10} {:>8} {:>10}\n",
        "stage", "docs", "seconds", "minutes", "cost"
    );
    for (stage, docs, secs) in &rows {
        let cost = a.cost_per_hour.map(|c| c * secs / 3600.0);
        let docs_s = docs.map(|d| d.to_string()).unwrap_or_default();
        let cost_s = cost.map(|c| format!("{c:.4}")).unwrap_or_default();
        writeln!(csv, "{stage},{docs_s},{secs:.3},{:.1},{cost_s}", half_minutes(*secs)).unwrap();
        writeln!(
            table,
            "{stage:<24} {docs_s:>10} {secs:>10.2} {:>8.1} {cost_s:>10}",
            half_minutes(*secs)
        )
        .unwrap();
    }
    log.write("report.csv", csv.as_bytes())?;
    print!("{table}");
    Ok(())
}
