//! Spearman rank correlation and correlation matrices over score tables.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{canonical_json, write_file, ScoreTable};
use crate::metrics::MetricId;
use crate::{Error, Result, Scalar};

pub const MIN_ROWS: usize = 3;

/// Doubled average ranks, centered on the doubled mean rank `n + 1`.
///
/// Doubling keeps tie averages integral, so the rank moments below are exact.
fn centered_doubled_ranks<F: Scalar>(x: &[F]) -> Vec<i64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0i64; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && x[idx[end + 1]] == x[idx[start]] {
            end += 1;
        }
        // 1-based ranks start+1..=end+1 average to (start+end+2)/2
        let doubled = (start + end + 2) as i64;
        for &i in &idx[start..=end] {
            ranks[i] = doubled - (n as i64 + 1);
        }
        start = end + 1;
    }
    ranks
}

fn check_input<F: Scalar>(x: &[F], y: &[F]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InsufficientData(format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "spearman needs at least {MIN_ROWS} observations, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::format("spearman input", "NaN value"));
    }
    Ok(())
}

/// Pearson correlation of average-tie ranks.
pub fn spearman<F: Scalar>(x: &[F], y: &[F]) -> Result<F> {
    check_input(x, y)?;
    let rx = centered_doubled_ranks(x);
    let ry = centered_doubled_ranks(y);
    let (mut cov, mut vx, mut vy) = (0i128, 0i128, 0i128);
    for (a, b) in rx.iter().zip(&ry) {
        let (a, b) = (*a as i128, *b as i128);
        cov += a * b;
        vx += a * a;
        vy += b * b;
    }
    if vx == 0 || vy == 0 {
        return Err(Error::UndefinedCorrelation("zero variance in ranked input".into()));
    }
    if let (Some(c2), Some(vv)) = (cov.checked_mul(cov), vx.checked_mul(vy)) {
        if c2 == vv {
            return Ok(if cov > 0 { F::one() } else { -F::one() });
        }
    }
    let rho = cov as f64 / ((vx as f64) * (vy as f64)).sqrt();
    Ok(F::lit(rho.clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<F> {
    pub metric_ids: Vec<MetricId>,
    pub rho: Vec<Vec<F>>,
    /// Rows left after listwise deletion.
    pub rows_used: usize,
}

#[derive(Serialize)]
struct MatrixJson<'a> {
    metric_ids: &'a [MetricId],
    rho: Vec<Vec<f64>>,
    rows_used: usize,
}

impl<F: Scalar> CorrelationMatrix<F> {
    pub fn len(&self) -> usize {
        self.metric_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric_ids.is_empty()
    }

    pub fn get(&self, a: MetricId, b: MetricId) -> Option<F> {
        let i = self.metric_ids.iter().position(|m| *m == a)?;
        let j = self.metric_ids.iter().position(|m| *m == b)?;
        Some(self.rho[i][j])
    }

    pub fn is_symmetric(&self) -> bool {
        let m = self.len();
        (0..m).all(|i| (0..m).all(|j| self.rho[i][j] == self.rho[j][i]))
    }

    /// Heatmap grid: metric ids as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for m in &self.metric_ids {
            write!(out, ",{m}").unwrap();
        }
        out.push('\n');
        for (m, row) in self.metric_ids.iter().zip(&self.rho) {
            out.push_str(m.as_str());
            for v in row {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(contents: &str) -> Result<Self> {
        let bad = |msg: String| Error::format("heatmap csv", msg);
        let mut lines = contents.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("metric") {
            return Err(bad("first header cell must be `metric`".into()));
        }
        let metric_ids: Vec<MetricId> = cols
            .map(|c| c.parse().map_err(|_| bad(format!("unknown metric `{c}`"))))
            .collect::<Result<_>>()?;
        let mut rho = Vec::with_capacity(metric_ids.len());
        for (i, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let id = cells.next().unwrap_or_default();
            if metric_ids.get(i).map(|m| m.as_str()) != Some(id) {
                return Err(bad(format!("row {} label `{id}` does not match header", i + 1)));
            }
            let row: Vec<F> = cells
                .map(|c| {
                    c.parse::<f64>()
                        .map(F::lit)
                        .map_err(|_| bad(format!("bad value `{c}`")))
                })
                .collect::<Result<_>>()?;
            if row.len() != metric_ids.len() {
                return Err(bad(format!("row `{id}` has {} cells", row.len())));
            }
            rho.push(row);
        }
        if rho.len() != metric_ids.len() {
            return Err(bad("matrix is not square".into()));
        }
        Ok(CorrelationMatrix {
            metric_ids,
            rho,
            rows_used: 0,
        })
    }

    pub fn to_json(&self) -> String {
        canonical_json(&MatrixJson {
            metric_ids: &self.metric_ids,
            rho: self
                .rho
                .iter()
                .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
            rows_used: self.rows_used,
        })
    }
}

pub fn export_heatmap_csv<F: Scalar>(matrix: &CorrelationMatrix<F>, path: &Path) -> Result<()> {
    write_file(path, matrix.to_csv().as_bytes())
}

/// Spearman matrix over the rows that have every requested metric.
///
/// Repeated metrics are allowed and correlate perfectly with themselves.
pub fn correlation_matrix<F: Scalar>(table: &ScoreTable, metrics: &[MetricId]) -> Result<CorrelationMatrix<F>> {
    let cols: Vec<usize> = metrics
        .iter()
        .map(|m| {
            table
                .column(*m)
                .ok_or_else(|| Error::Config(format!("metric `{m}` is not in the score table")))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<F>> = table
        .rows()
        .iter()
        .filter_map(|r| {
            cols.iter()
                .map(|&c| r.values[c].map(F::lit))
                .collect::<Option<Vec<F>>>()
        })
        .collect();
    if rows.len() < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} complete row(s) after listwise deletion, need {MIN_ROWS}",
            rows.len()
        )));
    }
    let m = metrics.len();
    let columns: Vec<Vec<F>> = (0..m).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let cells: Vec<F> = pairs
        .par_iter()
        .map(|&(i, j)| {
            spearman(&columns[i], &columns[j]).map_err(|e| match e {
                Error::UndefinedCorrelation(_) => Error::UndefinedCorrelation(format!(
                    "{} vs {}: constant ranks over {} rows",
                    metrics[i],
                    metrics[j],
                    rows.len()
                )),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mut rho = vec![vec![F::one(); m]; m];
    for (&(i, j), v) in pairs.iter().zip(cells) {
        rho[i][j] = v;
        rho[j][i] = v;
    }
    for (i, col) in columns.iter().enumerate() {
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::UndefinedCorrelation(format!(
                "{} is constant over {} rows",
                metrics[i],
                rows.len()
            )));
        }
    }
    Ok(CorrelationMatrix {
        metric_ids: metrics.to_vec(),
        rho,
        rows_used: rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ScoreRow;
    use proptest::prelude::*;

    /// Textbook Spearman: average ranks in floating point, then Pearson.
    fn oracle(x: &[f64], y: &[f64]) -> f64 {
        fn ranks(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let less = v.iter().filter(|b| *b < a).count() as f64;
                    let eq = v.iter().filter(|b| *b == a).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        }
        let (rx, ry) = (ranks(x), ranks(y));
        let n = x.len() as f64;
        let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn monotone_pairs_are_exact() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(spearman(&[1.0f32, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0f32);
    }

    #[test]
    fn ties_match_oracle() {
        let x = [1.0, 2.0, 2.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let got = spearman(&x, &y).unwrap();
        // ranks x = 1, 2.5, 2.5, 4; y = 1, 3, 2, 4: cov 4.5, vx 4.5, vy 5
        let hand = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((got - hand).abs() < 1e-15);
        assert!((got - oracle(&x, &y)).abs() < 1e-15);
        assert!((got - 0.9486832980505139).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InsufficientData(_))
        ));
        assert!(spearman(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    fn table(values: &[[Option<f64>; 3]]) -> ScoreTable {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, v)| ScoreRow {
                id: format!("d{i:03}"),
                token_count: 1,
                values: v.to_vec(),
            })
            .collect();
        ScoreTable::new(vec![MetricId::FkGrade, MetricId::GunningFog, MetricId::Mtld], rows).unwrap()
    }

    #[test]
    fn duplicate_column_correlates_perfectly() {
        let t = table(&[
            [Some(1.0), Some(3.0), Some(2.0)],
            [Some(2.0), Some(1.0), Some(5.0)],
            [Some(3.0), Some(2.0), Some(1.0)],
        ]);
        let m: CorrelationMatrix<f64> = correlation_matrix(&t, &[MetricId::FkGrade, MetricId::FkGrade]).unwrap();
        assert_eq!(m.rho, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn listwise_deletion_and_errors() {
        let full = [
            [Some(1.0), Some(3.0), Some(2.0)],
            [Some(2.0), Some(1.0), Some(5.0)],
            [Some(3.0), Some(2.0), Some(1.0)],
            [Some(4.0), Some(7.0), Some(0.5)],
        ];
        let mut with_gap = full.to_vec();
        with_gap.push([Some(100.0), None, Some(-3.0)]);
        let ms = [MetricId::FkGrade, MetricId::GunningFog, MetricId::Mtld];
        let a: CorrelationMatrix<f64> = correlation_matrix(&table(&full), &ms).unwrap();
        let b: CorrelationMatrix<f64> = correlation_matrix(&table(&with_gap), &ms).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows_used, 4);
        assert!(matches!(
            correlation_matrix::<f64>(&table(&full[..2]), &ms),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            correlation_matrix::<f64>(&table(&full), &[MetricId::Perplexity]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn heatmap_csv_shape_and_round_trip() {
        let m = CorrelationMatrix {
            metric_ids: vec![MetricId::FkGrade, MetricId::Smog],
            rho: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            rows_used: 3,
        };
        let csv = m.to_csv();
        assert_eq!(csv, "metric,fk_grade,smog\nfk_grade,1.0,0.0\nsmog,0.0,1.0\n");
        let back = CorrelationMatrix::<f64>::parse_csv(&csv).unwrap();
        assert_eq!(back.metric_ids, m.metric_ids);
        assert_eq!(back.rho, m.rho);
        let json = m.to_json();
        assert!(json.find("metric_ids").unwrap() < json.find("rho").unwrap());
    }

    fn distinct_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 3..40).prop_filter("two distinct values", |v| v.iter().any(|a| *a != v[0]))
    }

    proptest! {
        #[test]
        fn self_correlation_is_one(x in distinct_vec()) {
            prop_assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        }

        #[test]
        fn invariant_under_monotone_transforms(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..40)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(x.iter().any(|a| *a != x[0]) && y.iter().any(|a| *a != y[0]));
            let base = spearman(&x, &y).unwrap();
            let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let cy: Vec<f64> = y.iter().map(|v| (v + 10.0).powi(3)).collect();
            prop_assert_eq!(spearman(&ex, &y).unwrap(), base);
            prop_assert_eq!(spearman(&x, &cy).unwrap(), base);
            prop_assert!((base - oracle(&x, &y)).abs() < 1e-12);
        }

        #[test]
        fn matrix_is_symmetric_with_unit_diagonal(vals in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 4..30)) {
            let rows: Vec<[Option<f64>; 3]> = vals.iter().map(|v| [Some(v.0), Some(v.1), Some(v.2)]).collect();
            let t = table(&rows);
            let ms = [MetricId::FkGrade, MetricId::GunningFog, MetricId::Mtld];
            if let Ok(m) = correlation_matrix::<f64>(&t, &ms) {
                prop_assert!(m.is_symmetric());
                for i in 0..3 {
                    prop_assert_eq!(m.rho[i][i], 1.0);
                    for j in 0..3 {
                        prop_assert!(m.rho[i][j].abs() <= 1.0);
                    }
                }
                let back = CorrelationMatrix::<f64>::parse_csv(&m.to_csv()).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert!((back.rho[i][j] - m.rho[i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
