use super::*;
use crate::corpus::{Document, ScoreRow};
use crate::scheduler::{compose_warmup, GroupingMode, PacingKind};
use proptest::prelude::*;

fn ranked(tokens: &[u64]) -> Vec<RankedDoc> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| RankedDoc {
            id: format!("d{i:04}"),
            difficulty: i as f64,
            tokens: t,
        })
        .collect()
}

fn table(tokens: &[u64]) -> ScoreTable {
    let rows = tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| ScoreRow {
            id: format!("d{i:04}"),
            token_count: t,
            // scores deliberately not in id order
            values: vec![Some(((i * 37) % tokens.len()) as f64)],
        })
        .collect();
    ScoreTable::new(vec![MetricId::Mtld], rows).unwrap()
}

fn varied(n: usize) -> Vec<u64> {
    (0..n).map(|i| 20 + ((i * 7919) % 61) as u64).collect()
}

#[test]
fn vanilla_examples() {
    let docs = vec![
        RankedDoc {
            id: "d2".into(),
            difficulty: 1.0,
            tokens: 3,
        },
        RankedDoc {
            id: "d1".into(),
            difficulty: 2.0,
            tokens: 4,
        },
        RankedDoc {
            id: "d3".into(),
            difficulty: 3.0,
            tokens: 5,
        },
    ];
    let m = build_vanilla(&docs, MetricId::Mtld, None, 1).unwrap();
    assert_eq!(m.sequence, ["d2", "d1", "d3"]);
    let cut = build_vanilla(&docs, MetricId::Mtld, Some(3), 1).unwrap();
    assert_eq!(cut.sequence, ["d2"]);
    let other = build_vanilla(&docs, MetricId::Mtld, None, 999).unwrap();
    assert_eq!(other.order_hash, m.order_hash);
    assert!(build_vanilla(&[], MetricId::Mtld, None, 1).is_err());
    m.validate().unwrap();
}

#[test]
fn paced_single_group_is_baseline() {
    let docs = ranked(&varied(60));
    let grouping = make_groups(docs.clone(), 1, GroupingMode::EqualTokens, None).unwrap();
    let alloc = pacing_allocation(PacingKind::Linear, 1, 1000).unwrap();
    let paced = build_paced(&grouping, &alloc, 5).unwrap();
    let base = build_shuffled_baseline(&docs, Some(1000), 5).unwrap();
    assert_eq!(paced.sequence, base.sequence);
}

#[test]
fn forced_draws_follow_group_order() {
    let docs = ranked(&[3, 5, 7]);
    let grouping = make_groups(docs, 3, GroupingMode::EqualDocs, None).unwrap();
    let alloc = Allocation {
        tokens_per_group: vec![3, 5, 7],
        total: 15,
    };
    for seed in 0..5 {
        let m = build_paced(&grouping, &alloc, seed).unwrap();
        assert_eq!(m.sequence, ["d0000", "d0001", "d0002"]);
        assert_eq!(m.phase_marks.len(), 3);
    }
}

#[test]
fn seeds_change_paced_order() {
    let docs = ranked(&varied(200));
    let grouping = make_groups(docs, 4, GroupingMode::EqualTokens, None).unwrap();
    let alloc = pacing_allocation(PacingKind::Quadratic, 4, 5000).unwrap();
    let a = build_paced(&grouping, &alloc, 1).unwrap();
    assert_eq!(a, build_paced(&grouping, &alloc, 1).unwrap());
    let hashes: HashSet<String> = (0..100)
        .map(|s| build_paced(&grouping, &alloc, s).unwrap().order_hash)
        .collect();
    assert!(hashes.len() >= 99);
}

#[test]
fn interleave_with_one_pass_equals_linear_paced() {
    let docs = ranked(&varied(120));
    let grouping = make_groups(docs, 5, GroupingMode::EqualTokens, None).unwrap();
    let lin = pacing_allocation(PacingKind::Linear, 5, 3000).unwrap();
    let il = interleave_allocation(5, 1, 3000).unwrap();
    assert_eq!(
        build_paced(&grouping, &lin, 9).unwrap().sequence,
        build_interleaved(&grouping, &il, 9).unwrap().sequence
    );
}

#[test]
fn interleaved_cells_stay_in_their_group() {
    let tokens = varied(2000);
    let max_doc = *tokens.iter().max().unwrap();
    let grouping = make_groups(ranked(&tokens), 10, GroupingMode::EqualTokens, None).unwrap();
    let allocs = interleave_allocation(10, 10, 50_000).unwrap();
    let m = build_interleaved(&grouping, &allocs, 3).unwrap();
    m.validate().unwrap();
    assert_eq!(m.phase_marks.len(), 100);
    let group_of: HashMap<&str, usize> = grouping
        .groups
        .iter()
        .enumerate()
        .flat_map(|(g, docs)| docs.iter().map(move |d| (d.id.as_str(), g)))
        .collect();
    for (k, (mark, range)) in m.phase_marks.iter().zip(m.cell_ranges()).enumerate() {
        assert_eq!((mark.interleave as usize, mark.group as usize), (k / 10, k % 10));
        assert!(m.sequence[range]
            .iter()
            .all(|id| group_of[id.as_str()] == mark.group as usize));
        assert!(mark.realized_tokens.abs_diff(500) < max_doc);
    }
    assert!(m.total_tokens <= 50_000 && 50_000 - m.total_tokens < max_doc);
}

use std::collections::HashMap;

#[test]
fn exhausted_group_rolls_deficit_forward() {
    let docs = ranked(&[10, 10, 10, 10, 10, 10]);
    let grouping = make_groups(docs, 2, GroupingMode::EqualDocs, None).unwrap();
    let alloc = Allocation {
        tokens_per_group: vec![50, 10],
        total: 60,
    };
    let m = build_paced(&grouping, &alloc, 0).unwrap();
    assert_eq!(m.phase_marks[0].realized_tokens, 30);
    assert_eq!(m.phase_marks[1].realized_tokens, 30);
}

#[test]
fn baseline_contracts() {
    let docs = ranked(&varied(50));
    let all = build_shuffled_baseline(&docs, None, 1).unwrap();
    let mut ids = all.sequence.clone();
    ids.sort();
    assert_eq!(ids, docs.iter().map(|d| d.id.clone()).collect::<Vec<_>>());
    let a = build_shuffled_baseline(&docs, Some(500), 1).unwrap();
    let b = build_shuffled_baseline(&docs, Some(500), 2).unwrap();
    assert_ne!(a.sequence, b.sequence);
    let max_doc = docs.iter().map(|d| d.tokens).max().unwrap();
    for m in [&a, &b] {
        assert!(m.total_tokens <= 500 && 500 - m.total_tokens < max_doc);
    }
    assert_eq!(a, build_shuffled_baseline(&docs, Some(500), 1).unwrap());
    // input order does not matter
    let mut rev = docs.clone();
    rev.reverse();
    assert_eq!(
        a.order_hash,
        build_shuffled_baseline(&rev, Some(500), 1).unwrap().order_hash
    );
}

#[test]
fn prefix_shuffle_contracts() {
    let docs = ranked(&varied(100));
    let src = build_vanilla(&docs, MetricId::Mtld, None, 0).unwrap();
    let full = prefix_shuffle(&src, src.total_tokens, 4).unwrap();
    let mut a = full.sequence.clone();
    let mut b = src.sequence.clone();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert_eq!(full.ablation_of.as_deref(), Some(src.order_hash.as_str()));
    full.validate().unwrap();
    let one = prefix_shuffle(&src, src.token_counts[0], 4).unwrap();
    assert_eq!(one.sequence, src.sequence[..1]);
    let part = prefix_shuffle(&src, src.token_counts[0] + 1, 4).unwrap();
    assert_eq!(part.len(), 2);
    assert!(matches!(
        prefix_shuffle(&src, src.total_tokens + 1, 4),
        Err(Error::Range(_))
    ));
    assert!(prefix_shuffle(&src, 0, 4).is_err());
    let hashes: HashSet<String> = (0..100)
        .map(|s| prefix_shuffle(&src, src.total_tokens, s).unwrap().order_hash)
        .collect();
    assert!(hashes.len() >= 99 && !hashes.contains(&src.order_hash));
}

#[test]
fn warmup_phases_are_disjoint() {
    let t = table(&varied(300));
    let inner = CurriculumPlan::paced(MetricId::Mtld, PacingKind::Quadratic, 3, 4000, 8);
    let plan = compose_warmup(inner, 4000, 5000).unwrap();
    let m = build(&plan, &t).unwrap();
    m.validate().unwrap();
    let p0: HashSet<&str> = m.phase_ids(0).into_iter().collect();
    let p1 = m.phase_ids(1);
    assert!(!p0.is_empty() && !p1.is_empty());
    assert!(p1.iter().all(|id| !p0.contains(id)));
    let rest: Vec<RankedDoc> = pool_from_table(&t)
        .into_iter()
        .filter(|d| !p0.contains(d.id.as_str()))
        .collect();
    let expected = build_shuffled_baseline(&rest, Some(5000), derive_seed(8, 1)).unwrap();
    assert_eq!(p1, expected.sequence.iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn manifest_json_round_trip() {
    let t = table(&varied(80));
    for plan in [
        CurriculumPlan::interleaved(MetricId::Mtld, 3, 2, 2000, 1),
        compose_warmup(CurriculumPlan::vanilla(MetricId::Mtld, None), 1000, 1000).unwrap(),
        CurriculumPlan::shuffled_baseline(None, 3),
    ] {
        let m = build(&plan, &t).unwrap();
        let back = OrderManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}

#[test]
fn validate_catches_tampering() {
    let m = build_vanilla(&ranked(&[1, 2, 3]), MetricId::Mtld, None, 0).unwrap();
    let mut bad = m.clone();
    bad.sequence[1] = bad.sequence[0].clone();
    assert!(bad.validate().is_err());
    let mut bad = m.clone();
    bad.total_tokens += 1;
    assert!(bad.validate().is_err());
}

#[test]
fn shards_split_and_reassemble() {
    let docs: Vec<Document> = (0..5)
        .map(|i| Document::new(format!("d{i:04}"), format!("text {i}")))
        .collect();
    let m = build_vanilla(&ranked(&[10; 5]), MetricId::Mtld, None, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_shards(&m, &docs, 20, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    let sizes: Vec<usize> = paths
        .iter()
        .map(|p| crate::corpus::read_jsonl(p).unwrap().len())
        .collect();
    assert_eq!(sizes, [2, 2, 1]);
    let back = read_shards(&paths).unwrap();
    assert_eq!(back.iter().map(|d| d.id.clone()).collect::<Vec<_>>(), m.sequence);
    let first: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    let again = emit_shards(&m, &docs, 20, dir.path()).unwrap();
    let second: Vec<Vec<u8>> = again.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(first, second);
    assert!(dir.path().join(SHARD_MANIFEST).exists());
    let err = emit_shards(&m, &docs[..4], 20, dir.path()).unwrap_err();
    assert!(err.to_string().contains("d0004"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pacing_realization_bounds(tokens in prop::collection::vec(1u64..100, 30..300), n in 1usize..8, kind_ix in 0usize..3, seed: u64) {
        prop_assume!(n <= tokens.len());
        let total: u64 = tokens.iter().sum();
        let budget = total / 2;
        prop_assume!(budget > 0);
        let max_doc = *tokens.iter().max().unwrap();
        let grouping = make_groups(ranked(&tokens), n, GroupingMode::EqualTokens, None).unwrap();
        let kind = PacingKind::ALL[kind_ix];
        let alloc = pacing_allocation(kind, n, budget).unwrap();
        let m = build_paced(&grouping, &alloc, seed).unwrap();
        m.validate().unwrap();
        prop_assert!(m.total_tokens <= budget);
        // every group had room for its share only if it holds enough tokens
        let feasible = grouping.group_token_totals.iter().zip(&alloc.tokens_per_group).all(|(have, want)| *have >= want + 2 * max_doc);
        if feasible {
            prop_assert!(budget - m.total_tokens < max_doc);
            for mark in &m.phase_marks {
                prop_assert!(mark.realized_tokens.abs_diff(mark.target_tokens) < max_doc);
            }
        }
    }

    #[test]
    fn every_strategy_draws_without_replacement(tokens in prop::collection::vec(1u64..60, 20..120), seed: u64) {
        let t = table(&tokens);
        let total: u64 = tokens.iter().sum();
        let half = (total / 2).max(1);
        let plans = vec![
            CurriculumPlan::vanilla(MetricId::Mtld, None),
            CurriculumPlan::paced(MetricId::Mtld, PacingKind::InverseQuadratic, 3, half, seed),
            CurriculumPlan::interleaved(MetricId::Mtld, 3, 4, half, seed),
            CurriculumPlan::shuffled_baseline(Some(half), seed),
            compose_warmup(CurriculumPlan::paced(MetricId::Mtld, PacingKind::Linear, 2, half / 2 + 1, seed), half / 2 + 1, half).unwrap(),
        ];
        for plan in plans {
            let m = build(&plan, &t).unwrap();
            m.validate().unwrap();
        }
    }
}
