//! Lexical diversity: type–token ratio, MTLD and HD-D.

use std::hash::Hash;

use rustc_hash::{FxHashMap, FxHashSet};

use super::MetricId;
use crate::{Error, Result, Scalar};

/// Factor threshold for MTLD.
pub const MTLD_THRESHOLD: f64 = 0.72;
/// Minimum token count for MTLD.
pub const MTLD_MIN_TOKENS: usize = 10;
/// Sample size of the HD-D draw.
pub const HDD_SAMPLE: usize = 42;

pub fn ttr<F: Scalar, T: Hash + Eq>(tokens: &[T]) -> Result<F> {
    if tokens.is_empty() {
        return Err(Error::degenerate(MetricId::Ttr, "no tokens"));
    }
    let distinct: FxHashSet<&T> = tokens.iter().collect();
    Ok(F::count(distinct.len()) / F::count(tokens.len()))
}

fn mtld_pass<'a, F: Scalar, T: Hash + Eq + 'a>(tokens: impl Iterator<Item = &'a T>, len: usize) -> F {
    let threshold = F::lit(MTLD_THRESHOLD);
    let mut factors = F::zero();
    let mut types: FxHashSet<&T> = FxHashSet::default();
    let mut count = 0usize;
    let mut current_ttr = F::one();
    for tok in tokens {
        types.insert(tok);
        count += 1;
        current_ttr = F::count(types.len()) / F::count(count);
        if current_ttr <= threshold {
            factors = factors + F::one();
            types.clear();
            count = 0;
            current_ttr = F::one();
        }
    }
    if count > 0 {
        factors = factors + (F::one() - current_ttr) / (F::one() - threshold);
    }
    if factors == F::zero() {
        // every token distinct: one full factor
        return F::count(len);
    }
    F::count(len) / factors
}

/// Bidirectional MTLD: mean of the forward and backward factor lengths.
pub fn mtld<F: Scalar, T: Hash + Eq>(tokens: &[T]) -> Result<F> {
    if tokens.len() < MTLD_MIN_TOKENS {
        return Err(Error::degenerate(
            MetricId::Mtld,
            format!("{} tokens, need {MTLD_MIN_TOKENS}", tokens.len()),
        ));
    }
    let fwd: F = mtld_pass(tokens.iter(), tokens.len());
    let bwd: F = mtld_pass(tokens.iter().rev(), tokens.len());
    Ok((fwd + bwd) / F::lit(2.0))
}

/// HD-D: expected type–token ratio of a 42-token sample drawn without
/// replacement, from the hypergeometric probability that each type appears.
pub fn hdd<F: Scalar, T: Hash + Eq>(tokens: &[T]) -> Result<F> {
    let n = tokens.len();
    if n < HDD_SAMPLE {
        return Err(Error::degenerate(
            MetricId::Hdd,
            format!("{n} tokens, need {HDD_SAMPLE}"),
        ));
    }
    let mut counts: FxHashMap<&T, usize> = FxHashMap::default();
    for t in tokens {
        *counts.entry(t).or_default() += 1;
    }
    let mut freqs: Vec<usize> = counts.into_values().collect();
    freqs.sort_unstable();
    let mut present = F::zero();
    for c in freqs {
        // P(absent) = C(n - c, 42) / C(n, 42)
        let mut absent = F::one();
        if n - c < HDD_SAMPLE {
            absent = F::zero();
        } else {
            for k in 0..HDD_SAMPLE {
                absent = absent * F::count(n - c - k) / F::count(n - k);
            }
        }
        present = present + (F::one() - absent);
    }
    Ok(present / F::count(HDD_SAMPLE))
}
