use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroupingMode, PacingKind};
use crate::corpus::{canonical_json, write_file};
use crate::metrics::{MetricId, Polarity};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Vanilla,
    Paced {
        pacing: PacingKind,
        groups: usize,
    },
    Interleaved {
        groups: usize,
        interleaves: usize,
    },
    ShuffledBaseline,
    Warmup {
        inner: Box<CurriculumPlan>,
        warmup_tokens: u64,
        continuation_tokens: u64,
    },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Vanilla => "vanilla",
            Strategy::Paced { .. } => "paced",
            Strategy::Interleaved { .. } => "interleaved",
            Strategy::ShuffledBaseline => "shuffled_baseline",
            Strategy::Warmup { .. } => "warmup",
        }
    }

    fn uses_metric(&self) -> bool {
        !matches!(self, Strategy::ShuffledBaseline)
    }
}

/// Declarative description of how to order a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumPlan {
    pub strategy: Strategy,
    pub metric: Option<MetricId>,
    pub seed: u64,
    /// Token budget; `None` means the whole pool.
    pub budget: Option<u64>,
    pub grouping_mode: GroupingMode,
    /// Overrides the metric's default easy direction.
    pub polarity: Option<Polarity>,
}

impl CurriculumPlan {
    pub fn new(strategy: Strategy, metric: Option<MetricId>, seed: u64, budget: Option<u64>) -> Self {
        CurriculumPlan {
            strategy,
            metric,
            seed,
            budget,
            grouping_mode: GroupingMode::default(),
            polarity: None,
        }
    }

    pub fn vanilla(metric: MetricId, budget: Option<u64>) -> Self {
        Self::new(Strategy::Vanilla, Some(metric), 0, budget)
    }

    pub fn paced(metric: MetricId, pacing: PacingKind, groups: usize, budget: u64, seed: u64) -> Self {
        Self::new(Strategy::Paced { pacing, groups }, Some(metric), seed, Some(budget))
    }

    pub fn interleaved(metric: MetricId, groups: usize, interleaves: usize, budget: u64, seed: u64) -> Self {
        Self::new(
            Strategy::Interleaved { groups, interleaves },
            Some(metric),
            seed,
            Some(budget),
        )
    }

    pub fn shuffled_baseline(budget: Option<u64>, seed: u64) -> Self {
        Self::new(Strategy::ShuffledBaseline, None, seed, budget)
    }

    pub fn with_grouping_mode(mut self, mode: GroupingMode) -> Self {
        self.grouping_mode = mode;
        self
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = Some(polarity);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == Some(0) {
            return Err(Error::Config("budget T must be positive".into()));
        }
        if self.strategy.uses_metric() && self.metric.is_none() {
            return Err(Error::Config(format!(
                "strategy `{}` needs a metric",
                self.strategy.name()
            )));
        }
        match &self.strategy {
            Strategy::Paced { groups, .. } if *groups == 0 => {
                Err(Error::Config("group count N must be at least 1".into()))
            }
            Strategy::Paced { .. } if self.budget.is_none() => Err(Error::Config("paced plans need a budget T".into())),
            Strategy::Interleaved { groups, interleaves } if *groups == 0 || *interleaves == 0 => {
                Err(Error::Config("N and I must both be at least 1".into()))
            }
            Strategy::Interleaved { .. } if self.budget.is_none() => {
                Err(Error::Config("interleaved plans need a budget T".into()))
            }
            Strategy::Warmup {
                inner,
                warmup_tokens,
                continuation_tokens,
            } => {
                if matches!(inner.strategy, Strategy::Warmup { .. }) {
                    return Err(Error::Config("warmup plans cannot be nested".into()));
                }
                if *warmup_tokens == 0 || *continuation_tokens == 0 {
                    return Err(Error::Config("warmup budgets T1 and T2 must be positive".into()));
                }
                if inner.budget != Some(*warmup_tokens) {
                    return Err(Error::Config("warmup inner budget must equal T1".into()));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// Short human label, e.g. `paced-quadratic-N3-fk_grade`.
    pub fn label(&self) -> String {
        let base = match &self.strategy {
            Strategy::Vanilla => "vanilla".to_owned(),
            Strategy::Paced { pacing, groups } => format!("paced-{pacing}-N{groups}"),
            Strategy::Interleaved { groups, interleaves } => format!("interleaved-N{groups}-I{interleaves}"),
            Strategy::ShuffledBaseline => return format!("shuffled_baseline-s{}", self.seed),
            Strategy::Warmup { inner, .. } => return format!("warmup({})", inner.label()),
        };
        match self.metric {
            Some(m) => format!("{base}-{m}"),
            None => base,
        }
    }

    pub fn to_file(&self) -> PlanFile {
        let mut f = PlanFile {
            strategy: self.strategy.name().to_owned(),
            metric_id: self.metric,
            n: None,
            i: None,
            pacing: None,
            seed: self.seed,
            t: self.budget,
            t1: None,
            t2: None,
            grouping_mode: self.grouping_mode,
            inner_strategy: None,
            polarity: self.polarity,
        };
        let fill = |f: &mut PlanFile, s: &Strategy| match s {
            Strategy::Paced { pacing, groups } => {
                f.pacing = Some(*pacing);
                f.n = Some(*groups);
            }
            Strategy::Interleaved { groups, interleaves } => {
                f.n = Some(*groups);
                f.i = Some(*interleaves);
            }
            _ => {}
        };
        match &self.strategy {
            Strategy::Warmup {
                inner,
                warmup_tokens,
                continuation_tokens,
            } => {
                fill(&mut f, &inner.strategy);
                f.inner_strategy = Some(inner.strategy.name().to_owned());
                f.t1 = Some(*warmup_tokens);
                f.t2 = Some(*continuation_tokens);
            }
            s => fill(&mut f, s),
        }
        f
    }

    pub fn from_file(f: &PlanFile) -> Result<Self> {
        let plan = Self::from_file_unchecked(f)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Structural conversion without the semantic checks of [`validate`].
    ///
    /// [`validate`]: CurriculumPlan::validate
    pub(crate) fn from_file_unchecked(f: &PlanFile) -> Result<Self> {
        let base = |name: &str| -> Result<Strategy> {
            let need = |v: Option<usize>, what: &str| {
                v.ok_or_else(|| Error::Config(format!("strategy `{name}` needs `{what}`")))
            };
            Ok(match name {
                "vanilla" => Strategy::Vanilla,
                "paced" => Strategy::Paced {
                    pacing: f
                        .pacing
                        .ok_or_else(|| Error::Config("strategy `paced` needs `pacing`".into()))?,
                    groups: need(f.n, "N")?,
                },
                "interleaved" => Strategy::Interleaved {
                    groups: need(f.n, "N")?,
                    interleaves: need(f.i, "I")?,
                },
                "shuffled_baseline" => Strategy::ShuffledBaseline,
                "warmup" => return Err(Error::Config("warmup plans cannot be nested".into())),
                other => return Err(Error::Config(format!("unknown strategy `{other}`"))),
            })
        };
        let plan = if f.strategy == "warmup" {
            let (t1, t2) = match (f.t1, f.t2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Config("warmup plans need `T1` and `T2`".into())),
            };
            let inner_name = f
                .inner_strategy
                .as_deref()
                .ok_or_else(|| Error::Config("warmup plans need `inner_strategy`".into()))?;
            let inner = CurriculumPlan {
                strategy: base(inner_name)?,
                metric: f.metric_id,
                seed: f.seed,
                budget: Some(t1),
                grouping_mode: f.grouping_mode,
                polarity: f.polarity,
            };
            let plan = compose_warmup(inner, t1, t2)?;
            if f.t.is_some_and(|t| Some(t) != plan.budget) {
                return Err(Error::Config("warmup `T` must equal T1 + T2".into()));
            }
            plan
        } else {
            CurriculumPlan {
                strategy: base(&f.strategy)?,
                metric: f.metric_id,
                seed: f.seed,
                budget: f.t,
                grouping_mode: f.grouping_mode,
                polarity: f.polarity,
            }
        };
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        canonical_json(&self.to_file())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: PlanFile = serde_json::from_str(s).map_err(|e| Error::Config(format!("plan file: {e}")))?;
        Self::from_file(&f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Flat on-disk form of a plan. Warmup plans carry the inner strategy's
/// fields plus `inner_strategy`, `T1` and `T2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub strategy: String,
    #[serde(default)]
    pub metric_id: Option<MetricId>,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(rename = "I", default)]
    pub i: Option<usize>,
    #[serde(default)]
    pub pacing: Option<PacingKind>,
    pub seed: u64,
    #[serde(rename = "T", default)]
    pub t: Option<u64>,
    #[serde(rename = "T1", default)]
    pub t1: Option<u64>,
    #[serde(rename = "T2", default)]
    pub t2: Option<u64>,
    #[serde(default)]
    pub grouping_mode: GroupingMode,
    #[serde(default)]
    pub inner_strategy: Option<String>,
    #[serde(default)]
    pub polarity: Option<Polarity>,
}

/// Two-phase plan: `inner` over `t1` tokens, then a shuffled continuation
/// over `t2` tokens of documents not used in phase one.
pub fn compose_warmup(inner: CurriculumPlan, t1: u64, t2: u64) -> Result<CurriculumPlan> {
    if matches!(inner.strategy, Strategy::Warmup { .. }) {
        return Err(Error::Config("warmup plans cannot be nested".into()));
    }
    if t1 == 0 || t2 == 0 {
        return Err(Error::Config("warmup budgets T1 and T2 must be positive".into()));
    }
    let total = t1
        .checked_add(t2)
        .ok_or_else(|| Error::Range("T1 + T2 overflows".into()))?;
    let metric = inner.metric;
    let seed = inner.seed;
    let mode = inner.grouping_mode;
    let polarity = inner.polarity;
    let inner = CurriculumPlan {
        budget: Some(t1),
        ..inner
    };
    let plan = CurriculumPlan {
        strategy: Strategy::Warmup {
            inner: Box::new(inner),
            warmup_tokens: t1,
            continuation_tokens: t2,
        },
        metric,
        seed,
        budget: Some(total),
        grouping_mode: mode,
        polarity,
    };
    plan.validate()?;
    Ok(plan)
}
