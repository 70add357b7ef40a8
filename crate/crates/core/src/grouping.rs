//! Segment-level aggregation: pairing human and metric matrices into groups,
//! and averaging per-group statistics.
//!
//! A group whose statistic is undefined (typically a constant score vector)
//! is left out of the mean. Every [`CorrelationReport`] therefore records how
//! many groups contributed, since two metrics averaged over different groups
//! are not comparable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{pairs_of, suff_stats, PairCounts};
use crate::error::{Error, Result};
use crate::matrix::ScoreMatrix;
use crate::score::{EpsilonPolicy, ScoreVector};
use crate::stats::{stat_from_counts, StatKind, StatValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingMode {
    /// All aligned entries pooled into one vector.
    NoGrouping,
    /// One group per segment, holding every system's score for it.
    GroupByItem,
    /// One group per system, holding its score on every segment.
    GroupBySystem,
}

impl GroupingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupingMode::NoGrouping => "no-grouping",
            GroupingMode::GroupByItem => "group-by-item",
            GroupingMode::GroupBySystem => "group-by-system",
        }
    }
}

impl fmt::Display for GroupingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "no-grouping" | "none" => Ok(GroupingMode::NoGrouping),
            "group-by-item" | "item" => Ok(GroupingMode::GroupByItem),
            "group-by-system" | "system" => Ok(GroupingMode::GroupBySystem),
            _ => Err(Error::UnknownMode(s.to_string())),
        }
    }
}

/// Paired score vectors for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: String,
    pub human: ScoreVector,
    pub metric: ScoreVector,
}

impl Group {
    pub fn len(&self) -> usize {
        self.human.len()
    }

    pub fn is_empty(&self) -> bool {
        self.human.is_empty()
    }

    pub fn pairs(&self) -> u64 {
        pairs_of(self.len() as u64)
    }

    /// Smaller number of distinct values among the two vectors (for `tau_c`).
    pub fn distinct_values(&self) -> u64 {
        self.human.unique_count().min(self.metric.unique_count()) as u64
    }
}

/// Builds the groups for `mode` from entries present in both matrices.
///
/// Groups are ordered by id, and each vector is ordered by the other key.
/// Groups with a single aligned entry are kept; they hold no pairs.
pub fn align(h: &ScoreMatrix, m: &ScoreMatrix, mode: GroupingMode) -> Vec<Group> {
    let mut grouped: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (sys, seg, hv) in h.iter() {
        let Some(mv) = m.get(sys, seg) else { continue };
        let key = match mode {
            GroupingMode::NoGrouping => "*",
            GroupingMode::GroupByItem => seg,
            GroupingMode::GroupBySystem => sys,
        };
        let (hs, ms) = grouped.entry(key).or_default();
        hs.push(hv);
        ms.push(mv);
    }
    grouped
        .into_iter()
        .map(|(id, (hs, ms))| Group {
            id: id.to_string(),
            human: ScoreVector::new(hs).expect("matrix scores are finite"),
            metric: ScoreVector::new(ms).expect("matrix scores are finite"),
        })
        .collect()
}

/// A segment-level statistic together with its group and pair accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub stat: StatKind,
    pub mode: GroupingMode,
    pub value: StatValue,
    pub groups_total: usize,
    /// Groups whose statistic was defined and entered the mean.
    pub groups_used: usize,
    pub pairs_total: u64,
    /// Pair counts summed over the used groups.
    pub pairs_by_class: PairCounts,
    pub epsilon: EpsilonPolicy,
}

/// Per-group pair counts at a fixed tie rule.
pub(crate) fn group_counts(groups: &[Group], eps: EpsilonPolicy) -> Vec<PairCounts> {
    groups
        .par_iter()
        .map(|g| suff_stats(&g.human, &g.metric, eps).expect("aligned vectors have equal length"))
        .collect()
}

/// Sums the defined values in order and divides by their count.
pub(crate) fn mean_of_defined(values: impl IntoIterator<Item = StatValue>) -> (StatValue, usize) {
    let mut sum = 0.0;
    let mut used = 0usize;
    for v in values {
        if let StatValue::Defined(x) = v {
            sum += x;
            used += 1;
        }
    }
    if used == 0 {
        (StatValue::Undefined, 0)
    } else {
        (StatValue::Defined(sum / used as f64), used)
    }
}

pub(crate) fn group_value(kind: StatKind, group: &Group, counts: &PairCounts) -> StatValue {
    stat_from_counts(kind, counts, group.distinct_values(), group.len() as u64)
}

/// Aggregates precomputed per-group counts into a report.
pub(crate) fn report_from_counts(
    groups: &[Group],
    counts: &[PairCounts],
    mode: GroupingMode,
    kind: StatKind,
    eps: EpsilonPolicy,
) -> CorrelationReport {
    let values: Vec<StatValue> = groups
        .iter()
        .zip(counts)
        .map(|(g, c)| group_value(kind, g, c))
        .collect();
    let (value, groups_used) = mean_of_defined(values.iter().copied());
    let pairs_by_class = values
        .iter()
        .zip(counts)
        .filter(|(v, _)| v.is_defined())
        .map(|(_, c)| *c)
        .sum();
    CorrelationReport {
        stat: kind,
        mode,
        value,
        groups_total: groups.len(),
        groups_used,
        pairs_total: counts.iter().map(PairCounts::total).sum(),
        pairs_by_class,
        epsilon: eps,
    }
}

/// The segment-level statistic: per-group values averaged with equal weight
/// over the groups where the statistic is defined. With
/// [`GroupingMode::NoGrouping`] this is the statistic of the pooled vectors.
pub fn grouped_stat(
    h: &ScoreMatrix,
    m: &ScoreMatrix,
    mode: GroupingMode,
    kind: StatKind,
    eps: EpsilonPolicy,
) -> CorrelationReport {
    let groups = align(h, m, mode);
    let counts = group_counts(&groups, eps);
    report_from_counts(&groups, &counts, mode, kind, eps)
}

/// Maps every score onto one of `k` equal-width buckets spanning the
/// matrix's global range: `min(k - 1, floor((s - min) / (max - min) * k))`.
pub fn bucketize(m: &ScoreMatrix, k: usize) -> Result<ScoreMatrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("bucket count must be at least 1".into()));
    }
    let Some((lo, hi)) = m.min_max() else {
        return Ok(m.clone());
    };
    let range = hi - lo;
    let top = (k - 1) as f64;
    Ok(m.map_scores(|s| {
        if range == 0.0 {
            0.0
        } else {
            (((s - lo) / range) * k as f64).floor().min(top)
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketRow {
    pub k: usize,
    pub report: CorrelationReport,
}

/// Evaluates `kind` after bucketing the metric into each of `ks` buckets.
pub fn bucket_curve(
    h: &ScoreMatrix,
    m: &ScoreMatrix,
    mode: GroupingMode,
    kind: StatKind,
    ks: &[usize],
) -> Result<Vec<BucketRow>> {
    ks.iter()
        .map(|&k| {
            let bucketed = bucketize(m, k)?;
            let report = grouped_stat(h, &bucketed, mode, kind, EpsilonPolicy::exact());
            Ok(BucketRow { k, report })
        })
        .collect()
}
