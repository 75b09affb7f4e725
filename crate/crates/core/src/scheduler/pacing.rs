use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacingKind {
    Linear,
    Quadratic,
    InverseQuadratic,
}

impl PacingKind {
    pub const ALL: [PacingKind; 3] = [PacingKind::Linear, PacingKind::Quadratic, PacingKind::InverseQuadratic];

    pub fn as_str(self) -> &'static str {
        match self {
            PacingKind::Linear => "linear",
            PacingKind::Quadratic => "quadratic",
            PacingKind::InverseQuadratic => "inverse_quadratic",
        }
    }
}

impl std::fmt::Display for PacingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PacingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PacingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown pacing `{s}`")))
    }
}

/// Integer token budget per group, summing to `total`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub tokens_per_group: Vec<u64>,
    pub total: u64,
}

impl Allocation {
    pub fn n(&self) -> usize {
        self.tokens_per_group.len()
    }
}

/// Unnormalized group weights for groups i = 1..=n.
pub fn pacing_weights(kind: PacingKind, n: usize) -> Vec<u128> {
    let n = n as u128;
    (1..=n)
        .map(|i| match kind {
            PacingKind::Linear => 1,
            PacingKind::Quadratic => (i + 1) * (i + 1),
            PacingKind::InverseQuadratic => (n - i + 1) * (n - i + 1),
        })
        .collect()
}

/// Real-valued budget shares before rounding.
pub fn pacing_shares<F: Scalar>(kind: PacingKind, n: usize) -> Vec<F> {
    let w = pacing_weights(kind, n);
    let sum: u128 = w.iter().sum();
    w.iter().map(|&x| F::lit(x as f64 / sum as f64)).collect()
}

/// Largest-remainder apportionment of `total` by integer weights; ties in
/// the remainder go to the lower index.
fn apportion(weights: &[u128], total: u64) -> Vec<u64> {
    let sum: u128 = weights.iter().sum();
    let t = total as u128;
    let mut out: Vec<u64> = Vec::with_capacity(weights.len());
    let mut rems: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let p = w * t;
        out.push((p / sum) as u64);
        rems.push((p % sum, i));
    }
    let assigned: u64 = out.iter().sum();
    let mut left = total - assigned;
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &rems {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

pub fn pacing_allocation(kind: PacingKind, n: usize, total: u64) -> Result<Allocation> {
    if n == 0 {
        return Err(Error::Config("group count N must be at least 1".into()));
    }
    if total < n as u64 {
        log::warn!("budget T={total} is smaller than N={n}; some groups get no tokens");
    }
    Ok(Allocation {
        tokens_per_group: apportion(&pacing_weights(kind, n), total),
        total,
    })
}

/// `interleaves` linear allocations; every one of the I·N cells gets
/// T/(I·N) before rounding, and rounding is done once over all cells.
pub fn interleave_allocation(n: usize, interleaves: usize, total: u64) -> Result<Vec<Allocation>> {
    if n == 0 || interleaves == 0 {
        return Err(Error::Config("N and I must both be at least 1".into()));
    }
    let cells = n * interleaves;
    if total < cells as u64 {
        log::warn!("budget T={total} is smaller than I·N={cells}; rounding dominates");
    }
    let flat = apportion(&vec![1; cells], total);
    Ok(flat
        .chunks(n)
        .map(|c| Allocation {
            tokens_per_group: c.to_vec(),
            total: c.iter().sum(),
        })
        .collect())
}
