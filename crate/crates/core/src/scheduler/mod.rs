//! Difficulty ordering, grouping, pacing allocations and curriculum plans.

mod pacing;
mod plan;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::ScoreTable;
use crate::metrics::{MetricId, Polarity, PolarityMap};
use crate::{Error, Result};

pub use pacing::{interleave_allocation, pacing_allocation, pacing_shares, pacing_weights, Allocation, PacingKind};
pub use plan::{compose_warmup, CurriculumPlan, PlanFile, Strategy};

/// A scored document in easy-to-hard position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub id: String,
    /// Score oriented so that ascending means easy to hard.
    pub difficulty: f64,
    pub tokens: u64,
}

/// Documents that carry `metric`, sorted easy to hard with ties broken by id.
///
/// Rows where the metric failed are left out.
pub fn normalize_difficulty(table: &ScoreTable, metric: MetricId, polarity: &PolarityMap) -> Result<Vec<RankedDoc>> {
    let col = table
        .column(metric)
        .ok_or_else(|| Error::Config(format!("metric `{metric}` is not in the score table")))?;
    let sign = match polarity.get(metric) {
        Polarity::LowerEasier => 1.0,
        Polarity::HigherEasier => -1.0,
    };
    let mut missing = 0usize;
    let mut docs: Vec<RankedDoc> = table
        .rows()
        .iter()
        .filter_map(|r| match r.values[col] {
            Some(v) => Some(RankedDoc {
                id: r.id.clone(),
                difficulty: sign * v,
                tokens: r.token_count,
            }),
            None => {
                missing += 1;
                None
            }
        })
        .collect();
    if missing > 0 {
        log::warn!("{missing} document(s) without `{metric}` excluded from ordering");
    }
    docs.sort_by(rank_order);
    Ok(docs)
}

fn rank_order(a: &RankedDoc, b: &RankedDoc) -> Ordering {
    a.difficulty.total_cmp(&b.difficulty).then_with(|| a.id.cmp(&b.id))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMode {
    #[default]
    EqualTokens,
    EqualDocs,
}

impl std::str::FromStr for GroupingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal_tokens" => Ok(GroupingMode::EqualTokens),
            "equal_docs" => Ok(GroupingMode::EqualDocs),
            _ => Err(Error::Config(format!("unknown grouping mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyGrouping {
    pub metric: Option<MetricId>,
    pub mode: GroupingMode,
    /// Difficulty of the first document of groups 2..=N.
    pub boundaries: Vec<f64>,
    pub groups: Vec<Vec<RankedDoc>>,
    pub group_token_totals: Vec<u64>,
}

impl DifficultyGrouping {
    pub fn n(&self) -> usize {
        self.groups.len()
    }

    pub fn group_ids(&self, g: usize) -> impl Iterator<Item = &str> {
        self.groups[g].iter().map(|d| d.id.as_str())
    }

    pub fn doc_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

/// Splits an ascending order into `n` contiguous non-empty groups.
///
/// `equal_docs` cuts after position ⌈i·count/n⌉. `equal_tokens` walks the
/// order and closes group `g` at whichever document edge lies nearest the
/// cumulative target `g·total/n`, keeping at least one document for every
/// remaining group.
pub fn make_groups(
    ordered: Vec<RankedDoc>,
    n: usize,
    mode: GroupingMode,
    metric: Option<MetricId>,
) -> Result<DifficultyGrouping> {
    let count = ordered.len();
    if n == 0 {
        return Err(Error::Config("group count N must be at least 1".into()));
    }
    if n > count {
        return Err(Error::Config(format!(
            "group count N={n} exceeds document count {count}"
        )));
    }
    let cuts = match mode {
        GroupingMode::EqualDocs => (1..n).map(|i| (i * count).div_ceil(n)).collect(),
        GroupingMode::EqualTokens => token_cuts(&ordered, n),
    };
    let mut groups = Vec::with_capacity(n);
    let mut rest = ordered;
    for &cut in cuts.iter().rev() {
        groups.push(rest.split_off(cut));
    }
    groups.push(rest);
    groups.reverse();
    debug_assert!(groups.iter().all(|g| !g.is_empty()));
    let boundaries = groups[1..].iter().map(|g| g[0].difficulty).collect();
    let group_token_totals = groups.iter().map(|g| g.iter().map(|d| d.tokens).sum()).collect();
    Ok(DifficultyGrouping {
        metric,
        mode,
        boundaries,
        groups,
        group_token_totals,
    })
}

/// Positions where groups 2..=n start.
fn token_cuts(docs: &[RankedDoc], n: usize) -> Vec<usize> {
    let total: u128 = docs.iter().map(|d| d.tokens as u128).sum();
    let n128 = n as u128;
    let mut cuts = Vec::with_capacity(n - 1);
    let mut cum: u128 = 0;
    let mut group_start = 0;
    for (k, d) in docs.iter().enumerate() {
        let g = cuts.len();
        if g + 1 < n && k > group_start {
            let target = (g as u128 + 1) * total;
            let t = d.tokens as u128;
            let before = cum * n128;
            let after = (cum + t) * n128;
            let nearer_before = before < target && target <= after && target - before < after - target;
            let forced = docs.len() - k == n - g - 1;
            if nearer_before || forced {
                cuts.push(k);
                group_start = k;
            }
        }
        cum += d.tokens as u128;
        let g = cuts.len();
        if g + 1 < n && cum * n128 >= (g as u128 + 1) * total && k + 1 < docs.len() {
            cuts.push(k + 1);
            group_start = k + 1;
        }
    }
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ScoreRow;
    use proptest::prelude::*;

    fn table(metric: MetricId, scores: &[(&str, f64)]) -> ScoreTable {
        let rows = scores
            .iter()
            .map(|(id, v)| ScoreRow {
                id: id.to_string(),
                token_count: 1,
                values: vec![Some(*v)],
            })
            .collect();
        ScoreTable::new(vec![metric], rows).unwrap()
    }

    fn ids(docs: &[RankedDoc]) -> Vec<&str> {
        docs.iter().map(|d| d.id.as_str()).collect()
    }

    fn docs(tokens: &[u64]) -> Vec<RankedDoc> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, &t)| RankedDoc {
                id: format!("d{i:05}"),
                difficulty: i as f64,
                tokens: t,
            })
            .collect()
    }

    fn sizes(g: &DifficultyGrouping) -> Vec<usize> {
        g.groups.iter().map(Vec::len).collect()
    }

    #[test]
    fn normalize_examples() {
        let pm = PolarityMap::default();
        let t = table(MetricId::Mtld, &[("d1", 2.0), ("d2", 1.0), ("d3", 3.0)]);
        assert_eq!(
            ids(&normalize_difficulty(&t, MetricId::Mtld, &pm).unwrap()),
            ["d2", "d1", "d3"]
        );
        let t = table(MetricId::FleschReadingEase, &[("d1", 90.0), ("d2", 30.0)]);
        assert_eq!(
            ids(&normalize_difficulty(&t, MetricId::FleschReadingEase, &pm).unwrap()),
            ["d1", "d2"]
        );
        let t = table(MetricId::Mtld, &[("d2", 1.0), ("d1", 1.0)]);
        assert_eq!(
            ids(&normalize_difficulty(&t, MetricId::Mtld, &pm).unwrap()),
            ["d1", "d2"]
        );
        assert!(matches!(
            normalize_difficulty(&t, MetricId::Ttr, &pm),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn missing_values_are_excluded() {
        let rows = vec![
            ScoreRow {
                id: "a".into(),
                token_count: 1,
                values: vec![Some(1.0)],
            },
            ScoreRow {
                id: "b".into(),
                token_count: 1,
                values: vec![None],
            },
        ];
        let t = ScoreTable::new(vec![MetricId::Mtld], rows).unwrap();
        let out = normalize_difficulty(&t, MetricId::Mtld, &PolarityMap::default()).unwrap();
        assert_eq!(ids(&out), ["a"]);
    }

    #[test]
    fn grouping_examples() {
        let g = make_groups(docs(&[1; 10]), 2, GroupingMode::EqualDocs, None).unwrap();
        assert_eq!(sizes(&g), [5, 5]);
        let g = make_groups(docs(&[4, 4, 4, 4]), 2, GroupingMode::EqualTokens, None).unwrap();
        assert_eq!(sizes(&g), [2, 2]);
        let g = make_groups(docs(&[5, 1, 1, 1]), 2, GroupingMode::EqualTokens, None).unwrap();
        assert_eq!(sizes(&g), [1, 3]);
        assert_eq!(g.group_token_totals, [5, 3]);
        assert_eq!(g.boundaries, [1.0]);
        let g = make_groups(docs(&[1, 1, 1, 100]), 4, GroupingMode::EqualTokens, None).unwrap();
        assert_eq!(sizes(&g), [1, 1, 1, 1]);
        assert!(matches!(
            make_groups(docs(&[1, 1]), 3, GroupingMode::EqualDocs, None),
            Err(Error::Config(_))
        ));
        assert!(make_groups(docs(&[1, 1]), 0, GroupingMode::EqualDocs, None).is_err());
    }

    #[test]
    fn equal_docs_uses_ceiling_cuts() {
        let g = make_groups(docs(&[1; 7]), 3, GroupingMode::EqualDocs, None).unwrap();
        // cuts at ⌈7/3⌉ = 3 and ⌈14/3⌉ = 5
        assert_eq!(sizes(&g), [3, 2, 2]);
    }

    proptest! {
        #[test]
        fn grouping_is_partition(tokens in prop::collection::vec(1u64..500, 1..200), n_frac in 0.0f64..1.0, by_docs: bool) {
            let n = 1 + ((tokens.len() - 1) as f64 * n_frac) as usize;
            let mode = if by_docs { GroupingMode::EqualDocs } else { GroupingMode::EqualTokens };
            let input = docs(&tokens);
            let g = make_groups(input.clone(), n, mode, None).unwrap();
            prop_assert_eq!(g.n(), n);
            prop_assert!(g.groups.iter().all(|grp| !grp.is_empty()));
            let flat: Vec<RankedDoc> = g.groups.concat();
            prop_assert_eq!(flat, input);
            for w in g.groups.windows(2) {
                prop_assert!(w[0].last().unwrap().difficulty <= w[1][0].difficulty);
            }
        }

        #[test]
        fn equal_tokens_balance(tokens in prop::collection::vec(1u64..500, 2..300), n in 1usize..12) {
            prop_assume!(n <= tokens.len());
            let max_doc = *tokens.iter().max().unwrap();
            let total: u64 = tokens.iter().sum();
            // with enough mass per group, boundaries sit within half a document of their targets
            prop_assume!(total >= 2 * n as u64 * max_doc);
            let g = make_groups(docs(&tokens), n, GroupingMode::EqualTokens, None).unwrap();
            let hi = *g.group_token_totals.iter().max().unwrap();
            let lo = *g.group_token_totals.iter().min().unwrap();
            prop_assert!(hi - lo <= 2 * max_doc, "{:?} max_doc {}", g.group_token_totals, max_doc);
        }

        #[test]
        fn polarity_flip_reverses(scores in prop::collection::hash_set(-1000i32..1000, 1..50)) {
            let scores: Vec<(String, f64)> = scores.into_iter().enumerate().map(|(i, s)| (format!("d{i}"), s as f64)).collect();
            let refs: Vec<(&str, f64)> = scores.iter().map(|(a, b)| (a.as_str(), *b)).collect();
            let t = table(MetricId::Mtld, &refs);
            let pm = PolarityMap::default();
            let flipped = pm.clone().with_override(MetricId::Mtld, Polarity::HigherEasier);
            let a = normalize_difficulty(&t, MetricId::Mtld, &pm).unwrap();
            let mut b = normalize_difficulty(&t, MetricId::Mtld, &flipped).unwrap();
            b.reverse();
            prop_assert_eq!(ids(&a), ids(&b));
        }
    }
}
