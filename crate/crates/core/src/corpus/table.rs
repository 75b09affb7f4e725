use std::collections::HashMap;
use std::path::Path;

use rand::seq::index::sample;

use crate::corpus::write_file;
use crate::metrics::MetricId;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ScoreRow {
    pub id: String,
    pub token_count: u64,
    /// One cell per table metric; `None` where the metric failed.
    pub values: Vec<Option<f64>>,
}

impl PartialEq for ScoreRow {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.token_count == other.token_count
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.map(f64::to_bits) == b.map(f64::to_bits))
    }
}

/// Per-document metric values in corpus order. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    metrics: Vec<MetricId>,
    rows: Vec<ScoreRow>,
    index: HashMap<String, usize>,
}

impl ScoreTable {
    pub fn new(metrics: Vec<MetricId>, rows: Vec<ScoreRow>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = metrics.iter().find(|m| !seen.insert(**m)) {
            return Err(Error::format("score table", format!("duplicate metric column `{dup}`")));
        }
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.values.len() != metrics.len() {
                return Err(Error::format(
                    "score table",
                    format!(
                        "row `{}` has {} values for {} metrics",
                        row.id,
                        row.values.len(),
                        metrics.len()
                    ),
                ));
            }
            if row.token_count == 0 {
                return Err(Error::format(
                    "score table",
                    format!("row `{}` has zero tokens", row.id),
                ));
            }
            if let Some(v) = row.values.iter().flatten().find(|v| !v.is_finite()) {
                return Err(Error::format(
                    "score table",
                    format!("row `{}` has non-finite score {v}", row.id),
                ));
            }
            if index.insert(row.id.clone(), i).is_some() {
                return Err(Error::format("score table", format!("duplicate id `{}`", row.id)));
            }
        }
        Ok(ScoreTable { metrics, rows, index })
    }

    pub fn metrics(&self) -> &[MetricId] {
        &self.metrics
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, metric: MetricId) -> Option<usize> {
        self.metrics.iter().position(|m| *m == metric)
    }

    pub fn row(&self, id: &str) -> Option<&ScoreRow> {
        self.index.get(id).map(|&i| &self.rows[i])
    }

    pub fn value(&self, id: &str, metric: MetricId) -> Option<f64> {
        let col = self.column(metric)?;
        self.row(id)?.values[col]
    }

    pub fn token_count(&self, id: &str) -> Option<u64> {
        self.row(id).map(|r| r.token_count)
    }

    /// Seeded uniform subset of `k` rows, kept in table order.
    pub fn sample(&self, k: usize, seed: u64) -> ScoreTable {
        if k >= self.rows.len() {
            return self.clone();
        }
        let mut rng = crate::rng::stream(seed, u32::MAX, 0);
        let mut picked = sample(&mut rng, self.rows.len(), k).into_vec();
        picked.sort_unstable();
        let rows = picked.into_iter().map(|i| self.rows[i].clone()).collect();
        ScoreTable::new(self.metrics.clone(), rows).expect("subset of a valid table")
    }

    /// CSV with header `id,token_count,<metric>...`; empty cells for missing
    /// values; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["id".to_owned(), "token_count".to_owned()];
        header.extend(self.metrics.iter().map(|m| m.as_str().to_owned()));
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.id.clone(), row.token_count.to_string()];
            rec.extend(row.values.iter().map(|v| match v {
                Some(x) => format!("{x:?}"),
                None => String::new(),
            }));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn parse_csv(contents: &str, context: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(contents.as_bytes());
        let header = r.headers().map_err(|e| Error::format(context, e.to_string()))?.clone();
        if header.get(0) != Some("id") || header.get(1) != Some("token_count") {
            return Err(Error::format(context, "header must start with `id,token_count`"));
        }
        let mut metrics = Vec::new();
        for col in header.iter().skip(2) {
            let m: MetricId = col
                .parse()
                .map_err(|_| Error::format(context, format!("unknown metric column `{col}`")))?;
            metrics.push(m);
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::format(context, format!("line {line}: {e}")))?;
            let token_count = rec[1]
                .parse()
                .map_err(|_| Error::format(context, format!("line {line}: bad token_count `{}`", &rec[1])))?;
            let mut values = Vec::with_capacity(metrics.len());
            for (j, cell) in rec.iter().skip(2).enumerate() {
                if cell.is_empty() {
                    values.push(None);
                } else {
                    let v: f64 = cell.parse().map_err(|_| {
                        Error::format(
                            context,
                            format!("line {line}, column `{}`: bad float `{cell}`", metrics[j]),
                        )
                    })?;
                    values.push(Some(v));
                }
            }
            rows.push(ScoreRow {
                id: rec[0].to_owned(),
                token_count,
                values,
            });
        }
        ScoreTable::new(metrics, rows)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InsufficientData("refusing to write an empty score table".into()));
        }
        write_file(path, self.to_csv().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&contents, &path.display().to_string())
    }
}

/// Writes a score table. Alias of [`ScoreTable::write`].
pub fn write_scores(table: &ScoreTable, path: &Path) -> Result<()> {
    table.write(path)
}

/// Reads a score table. Alias of [`ScoreTable::read`].
pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    ScoreTable::read(path)
}
