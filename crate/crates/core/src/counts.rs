//! Pairwise sufficient statistics.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{EpsilonPolicy, ScoreVector};

/// The class of one unordered pair of observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    Concordant,
    Discordant,
    /// Tied in the human scores only.
    HumanTie,
    /// Tied in the metric scores only.
    MetricTie,
    /// Tied in both.
    JointTie,
}

impl PairClass {
    /// Human ties are exact equality; metric ties follow `eps`.
    #[inline]
    pub fn classify(h_i: f64, h_j: f64, m_i: f64, m_j: f64, eps: &EpsilonPolicy) -> Self {
        let human_tied = h_i == h_j;
        let metric_tied = eps.ties(m_i, m_j);
        match (human_tied, metric_tied) {
            (true, true) => PairClass::JointTie,
            (true, false) => PairClass::HumanTie,
            (false, true) => PairClass::MetricTie,
            (false, false) => {
                if (h_i < h_j) == (m_i < m_j) {
                    PairClass::Concordant
                } else {
                    PairClass::Discordant
                }
            }
        }
    }
}

/// Counts of pairs per [`PairClass`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub human_ties: u64,
    pub metric_ties: u64,
    pub joint_ties: u64,
}

impl PairCounts {
    pub const fn new(
        concordant: u64,
        discordant: u64,
        human_ties: u64,
        metric_ties: u64,
        joint_ties: u64,
    ) -> Self {
        Self {
            concordant,
            discordant,
            human_ties,
            metric_ties,
            joint_ties,
        }
    }

    pub fn total(&self) -> u64 {
        self.concordant + self.discordant + self.human_ties + self.metric_ties + self.joint_ties
    }

    pub fn get(&self, class: PairClass) -> u64 {
        match class {
            PairClass::Concordant => self.concordant,
            PairClass::Discordant => self.discordant,
            PairClass::HumanTie => self.human_ties,
            PairClass::MetricTie => self.metric_ties,
            PairClass::JointTie => self.joint_ties,
        }
    }

    fn slot(&mut self, class: PairClass) -> &mut u64 {
        match class {
            PairClass::Concordant => &mut self.concordant,
            PairClass::Discordant => &mut self.discordant,
            PairClass::HumanTie => &mut self.human_ties,
            PairClass::MetricTie => &mut self.metric_ties,
            PairClass::JointTie => &mut self.joint_ties,
        }
    }

    #[inline]
    pub fn record(&mut self, class: PairClass) {
        *self.slot(class) += 1;
    }

    /// Moves `count` pairs from one class to another.
    ///
    /// Panics if `from` holds fewer than `count` pairs.
    #[inline]
    pub fn transfer(&mut self, from: PairClass, to: PairClass, count: u64) {
        let src = self.slot(from);
        *src = src
            .checked_sub(count)
            .expect("transfer would make a pair count negative");
        *self.slot(to) += count;
    }
}

impl Add for PairCounts {
    type Output = PairCounts;

    fn add(mut self, rhs: PairCounts) -> PairCounts {
        self += rhs;
        self
    }
}

impl AddAssign for PairCounts {
    fn add_assign(&mut self, rhs: PairCounts) {
        self.concordant += rhs.concordant;
        self.discordant += rhs.discordant;
        self.human_ties += rhs.human_ties;
        self.metric_ties += rhs.metric_ties;
        self.joint_ties += rhs.joint_ties;
    }
}

impl std::iter::Sum for PairCounts {
    fn sum<I: Iterator<Item = PairCounts>>(iter: I) -> Self {
        iter.fold(PairCounts::default(), Add::add)
    }
}

#[inline]
pub(crate) fn pairs_of(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn check_lengths(h: &[f64], m: &[f64]) -> Result<()> {
    if h.len() != m.len() {
        return Err(Error::LengthMismatch {
            human: h.len(),
            metric: m.len(),
        });
    }
    Ok(())
}

/// Classifies every unordered pair of `(h[i], m[i])` observations.
///
/// With `epsilon == 0` the counts come from an `O(n log n)` sort-and-merge
/// pass; otherwise every pair is enumerated. Both paths produce identical
/// counts (see `suff_stats_enumerate`).
pub fn suff_stats(h: &ScoreVector, m: &ScoreVector, eps: EpsilonPolicy) -> Result<PairCounts> {
    check_lengths(h, m)?;
    if eps.epsilon == 0.0 {
        Ok(exact_counts(h, m))
    } else {
        Ok(enumerate(h, m, &eps))
    }
}

/// `O(n^2)` reference implementation: classifies each pair directly.
pub fn suff_stats_enumerate(
    h: &ScoreVector,
    m: &ScoreVector,
    eps: EpsilonPolicy,
) -> Result<PairCounts> {
    check_lengths(h, m)?;
    Ok(enumerate(h, m, &eps))
}

fn enumerate(h: &[f64], m: &[f64], eps: &EpsilonPolicy) -> PairCounts {
    let mut counts = PairCounts::default();
    for i in 0..h.len() {
        let (hi, mi) = (h[i], m[i]);
        for j in (i + 1)..h.len() {
            counts.record(PairClass::classify(hi, h[j], mi, m[j], eps));
        }
    }
    counts
}

#[inline]
fn cmp_f64(a: f64, b: f64) -> Ordering {
    // Inputs are finite, and -0.0 must equal 0.0.
    a.partial_cmp(&b).expect("scores are finite")
}

/// Number of pairs inside runs of equal adjacent values.
fn tied_pairs_in_runs<T, F>(sorted: &[T], mut same: F) -> u64
where
    F: FnMut(&T, &T) -> bool,
{
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += pairs_of(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        total += pairs_of(run);
    }
    total
}

/// Exact-tie counts (epsilon = 0) in `O(n log n)`.
///
/// Sorting by `(h, m)` makes every strict inversion of `m` a discordant pair;
/// equal-`h` runs are sorted by `m` and so contribute no inversions.
fn exact_counts(h: &[f64], m: &[f64]) -> PairCounts {
    let n = h.len() as u64;
    if n < 2 {
        return PairCounts::default();
    }

    let mut pairs: Vec<(f64, f64)> = h.iter().copied().zip(m.iter().copied()).collect();
    pairs.sort_unstable_by(|a, b| cmp_f64(a.0, b.0).then(cmp_f64(a.1, b.1)));

    let human_tied = tied_pairs_in_runs(&pairs, |a, b| a.0 == b.0);
    let joint = tied_pairs_in_runs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ms: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut ms);
    // `ms` is now sorted.
    let metric_tied = tied_pairs_in_runs(&ms, |a, b| a == b);

    let human_ties = human_tied - joint;
    let metric_ties = metric_tied - joint;
    PairCounts {
        concordant: pairs_of(n) - discordant - human_ties - metric_ties - joint,
        discordant,
        human_ties,
        metric_ties,
        joint_ties: joint,
    }
}

/// Counts pairs `i < j` with `v[i] > v[j]` (strictly) and sorts `v`.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    let mut buf = vec![0.0; n];
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            if mid < end {
                inversions += merge(&v[start..mid], &v[mid..end], &mut buf[start..end]);
                v[start..end].copy_from_slice(&buf[start..end]);
            }
            start = end;
        }
        width *= 2;
    }
    inversions
}

fn merge(left: &[f64], right: &[f64], out: &mut [f64]) -> u64 {
    let (mut i, mut j, mut k) = (0, 0, 0);
    let mut inversions = 0u64;
    while i < left.len() && j < right.len() {
        // Equal values go left-first, so ties are not inversions.
        if right[j] < left[i] {
            out[k] = right[j];
            inversions += (left.len() - i) as u64;
            j += 1;
        } else {
            out[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    out[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    out[k..].copy_from_slice(&right[j..]);
    inversions
}
