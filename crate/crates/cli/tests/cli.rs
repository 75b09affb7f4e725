use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curricula::corpus::{read_scores, write_jsonl};
use curricula::synth::SynthConfig;
use curricula::OrderManifest;

fn currictl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_currictl"))
        .current_dir(dir)
        .env_remove("CURRICTL_SEED")
        .env_remove("CURRICTL_THREADS")
        .env_remove("CURRICTL_OUT")
        .args(args)
        .output()
        .expect("run currictl")
}

#[track_caller]
fn ok(dir: &Path, args: &[&str]) -> String {
    let out = currictl(dir, args);
    assert!(
        out.status.success(),
        "currictl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn corpus(dir: &Path, n: usize) -> PathBuf {
    let p = dir.join("corpus.jsonl");
    write_jsonl(&p, &SynthConfig::new(11).docs(n, "doc")).unwrap();
    p
}

#[test]
fn score_ten_documents_on_selected_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir, 10);
    let stdout = ok(
        dir,
        &[
            "score",
            "--corpus",
            "corpus.jsonl",
            "--metrics",
            "selected",
            "--out",
            "s",
        ],
    );
    assert!(stdout.contains("scored 10 documents on 6 metrics"));
    let table = read_scores(&dir.join("s/scores.csv")).unwrap();
    assert_eq!(table.len(), 10);
    assert_eq!(table.metrics().len(), 6);
    for f in [
        "run.json",
        "timing.csv",
        "score_errors.csv",
        "corpus_manifest.json",
        "lm.ngram",
    ] {
        assert!(dir.join("s").join(f).exists(), "{f} missing");
    }
}

#[test]
fn quadratic_plan_builds_to_pinned_group_totals() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir, 300);
    ok(
        dir,
        &[
            "score",
            "--corpus",
            "corpus.jsonl",
            "--metrics",
            "num_tokens,mtld",
            "--out",
            "s",
        ],
    );
    ok(
        dir,
        &[
            "plan",
            "--strategy",
            "paced",
            "--metric",
            "mtld",
            "--pacing",
            "quadratic",
            "--N",
            "3",
            "--T",
            "29000",
            "--out",
            "p",
        ],
    );
    ok(
        dir,
        &[
            "build",
            "--plan",
            "p/plan.json",
            "--scores",
            "s/scores.csv",
            "--out",
            "b",
        ],
    );

    let table = read_scores(&dir.join("s/scores.csv")).unwrap();
    let max_doc = table.rows().iter().map(|r| r.token_count).max().unwrap();
    let m = OrderManifest::load(&dir.join("b/order_manifest.json")).unwrap();
    let targets: Vec<u64> = m.phase_marks.iter().map(|c| c.target_tokens).collect();
    assert_eq!(targets, [4000, 9000, 16000]);
    for c in &m.phase_marks {
        assert!(
            c.realized_tokens.abs_diff(c.target_tokens) < max_doc,
            "group {} realized {} for {}",
            c.group,
            c.realized_tokens,
            c.target_tokens
        );
    }
}

#[test]
fn reruns_are_identical_and_replay_checks_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir, 60);
    ok(
        dir,
        &["--threads", "1", "score", "--corpus", "corpus.jsonl", "--out", "s1"],
    );
    ok(
        dir,
        &["--threads", "4", "score", "--corpus", "corpus.jsonl", "--out", "s4"],
    );
    let read = |p: &str| std::fs::read(dir.join(p)).unwrap();
    assert_eq!(read("s1/scores.csv"), read("s4/scores.csv"));

    ok(
        dir,
        &[
            "--seed",
            "9",
            "plan",
            "--strategy",
            "interleaved",
            "--metric",
            "fertility",
            "--N",
            "2",
            "--I",
            "2",
            "--T",
            "4000",
            "--out",
            "p",
        ],
    );
    ok(
        dir,
        &[
            "build",
            "--plan",
            "p/plan.json",
            "--scores",
            "s1/scores.csv",
            "--corpus",
            "corpus.jsonl",
            "--shard-tokens",
            "1000",
            "--out",
            "b1",
        ],
    );
    ok(
        dir,
        &[
            "build",
            "--plan",
            "p/plan.json",
            "--scores",
            "s1/scores.csv",
            "--corpus",
            "corpus.jsonl",
            "--shard-tokens",
            "1000",
            "--out",
            "b2",
        ],
    );
    assert_eq!(read("b1/order_manifest.json"), read("b2/order_manifest.json"));
    assert_eq!(read("b1/shards/shard-00000.jsonl"), read("b2/shards/shard-00000.jsonl"));

    let stdout = ok(dir, &["replay", "b1/run.json", "--out", "b3"]);
    assert!(stdout.contains("reproduced"));
    assert_eq!(read("b1/order_manifest.json"), read("b3/order_manifest.json"));

    // tampering with a recorded input is an integrity failure
    let mut scores = read("s1/scores.csv");
    scores.extend_from_slice(b"\n");
    std::fs::write(dir.join("s1/scores.csv"), scores).unwrap();
    assert_eq!(currictl(dir, &["replay", "b1/run.json"]).status.code(), Some(2));
}

#[test]
fn probe_reports_savings_against_a_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir, 120);
    ok(
        dir,
        &[
            "score",
            "--corpus",
            "corpus.jsonl",
            "--metrics",
            "num_tokens",
            "--out",
            "s",
        ],
    );
    ok(
        dir,
        &["plan", "--strategy", "vanilla", "--metric", "num_tokens", "--out", "pv"],
    );
    ok(dir, &["plan", "--strategy", "shuffled_baseline", "--out", "pb"]);
    ok(
        dir,
        &[
            "build",
            "--plan",
            "pv/plan.json",
            "--scores",
            "s/scores.csv",
            "--out",
            "bv",
        ],
    );
    ok(
        dir,
        &[
            "build",
            "--plan",
            "pb/plan.json",
            "--scores",
            "s/scores.csv",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "bb",
        ],
    );
    ok(
        dir,
        &[
            "probe",
            "--order",
            "bv/order_manifest.json",
            "--baseline",
            "bb/shards",
            "--corpus",
            "corpus.jsonl",
            "--heldout-docs",
            "10",
            "--checkpoint-tokens",
            "2000",
            "--out",
            "pr",
        ],
    );
    let traj = std::fs::read_to_string(dir.join("pr/trajectory.csv")).unwrap();
    assert!(traj.starts_with("tokens_seen,heldout_ppl\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("pr/savings.json")).unwrap()).unwrap();
    assert!(report["baseline_best"].as_f64().unwrap() > 1.0);

    let out = ok(
        dir,
        &[
            "report",
            "--timing",
            "s/timing.csv",
            "--runs",
            "pr/run.json",
            "--out",
            "r",
        ],
    );
    assert!(out.contains("minutes"));
    assert!(out.contains("run:probe"));
}

#[test]
fn warmup_plan_probes_both_phases() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir, 120);
    ok(
        dir,
        &[
            "score",
            "--corpus",
            "corpus.jsonl",
            "--metrics",
            "compression_ratio",
            "--out",
            "s",
        ],
    );
    ok(
        dir,
        &[
            "plan",
            "--strategy",
            "warmup",
            "--inner-strategy",
            "paced",
            "--metric",
            "compression_ratio",
            "--pacing",
            "linear",
            "--N",
            "2",
            "--T1",
            "5000",
            "--T2",
            "5000",
            "--out",
            "p",
        ],
    );
    ok(
        dir,
        &[
            "build",
            "--plan",
            "p/plan.json",
            "--scores",
            "s/scores.csv",
            "--out",
            "b",
        ],
    );
    let out = ok(
        dir,
        &[
            "probe",
            "--order",
            "b/order_manifest.json",
            "--corpus",
            "corpus.jsonl",
            "--heldout-docs",
            "10",
            "--resume",
            "best",
            "--out",
            "pr",
        ],
    );
    assert!(out.contains("warmup("));
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir, 10);
    let code = |args: &[&str]| currictl(dir, args).status.code();
    assert_eq!(code(&["plan", "--no-such-flag"]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(
        code(&["plan", "--strategy", "paced", "--metric", "mtld", "--out", "p"]),
        Some(3)
    );
    assert_eq!(
        code(&["score", "--corpus", "corpus.jsonl", "--metrics", "nope", "--out", "s"]),
        Some(3)
    );
    assert_eq!(code(&["score", "--corpus", "missing.jsonl", "--out", "s"]), Some(2));
    std::fs::write(dir.join("bad.csv"), "not,a,table\n").unwrap();
    ok(dir, &["plan", "--strategy", "shuffled_baseline", "--out", "p"]);
    assert_eq!(
        code(&["build", "--plan", "p/plan.json", "--scores", "bad.csv", "--out", "b"]),
        Some(2)
    );
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn environment_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = Command::new(env!("CARGO_BIN_EXE_currictl"))
        .current_dir(dir)
        .env("CURRICTL_SEED", "42")
        .env("CURRICTL_OUT", "from-env")
        .args(["plan", "--strategy", "shuffled_baseline", "--T", "100"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("from-env/plan.json")).unwrap()).unwrap();
    assert_eq!(plan["seed"], 42);
}
