//! Tie calibration: choosing the metric tie threshold `epsilon` that
//! maximises a statistic.
//!
//! Raising `epsilon` only ever turns pairs into metric ties, and a pair's
//! status changes exactly when `epsilon` reaches its score gap. So the
//! statistic is a step function of `epsilon` whose steps sit at the observed
//! within-group gaps. [`Sweep`] visits those gaps in ascending order and moves
//! each pair from its `epsilon = 0` class (concordant, discordant or
//! human-only tie) into the metric-only or joint tie class, updating only the
//! groups it touches.
//!
//! With a sample fraction below one, the candidate thresholds are the gaps of
//! a uniform sample of pairs (drawn without replacement), but every candidate
//! is still evaluated on all pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::counts::{PairClass, PairCounts};
use crate::error::{Error, Result};
use crate::grouping::{
    align, group_counts, group_value, mean_of_defined, report_from_counts, CorrelationReport,
    Group, GroupingMode,
};
use crate::matrix::ScoreMatrix;
use crate::score::{EpsMode, EpsilonPolicy};
use crate::stats::{StatKind, StatValue};

/// Slack allowed between the running mean and the exact mean when deciding
/// whether a checkpoint could be a new maximum.
const RUNNING_SUM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub kind: StatKind,
    pub mode: GroupingMode,
    pub eps_mode: EpsMode,
    /// Fraction of pairs whose gaps become candidate thresholds; `1.0` means
    /// every gap is a candidate.
    pub sample_fraction: f64,
    pub seed: u64,
}

impl CalibrationConfig {
    pub fn new(kind: StatKind, mode: GroupingMode) -> Self {
        Self {
            kind,
            mode,
            eps_mode: EpsMode::Absolute,
            sample_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn with_eps_mode(mut self, eps_mode: EpsMode) -> Self {
        self.eps_mode = eps_mode;
        self
    }

    pub fn with_sampling(mut self, sample_fraction: f64, seed: u64) -> Self {
        self.sample_fraction = sample_fraction;
        self.seed = seed;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.sample_fraction == 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// The smallest candidate threshold attaining the maximum.
    pub epsilon_star: f64,
    pub stat_star: StatValue,
    /// Candidate thresholds evaluated, including zero.
    pub candidates_evaluated: usize,
    pub exact: bool,
    /// The full report at `epsilon_star`.
    pub report: CorrelationReport,
    pub config: CalibrationConfig,
}

impl CalibrationResult {
    pub fn epsilon(&self) -> EpsilonPolicy {
        EpsilonPolicy {
            mode: self.config.eps_mode,
            epsilon: self.epsilon_star,
        }
    }
}

/// Compensated running sum supporting removal.
#[derive(Debug, Clone, Copy, Default)]
struct RunningSum {
    sum: f64,
    carry: f64,
}

impl RunningSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

// Packed pair event: group index in the high bits, origin class in the low two.
const CLASS_BITS: u32 = 2;
const MAX_GROUPS: usize = 1 << (32 - CLASS_BITS);

fn pack(group: usize, class: PairClass) -> u32 {
    let tag = match class {
        PairClass::Concordant => 0,
        PairClass::Discordant => 1,
        PairClass::HumanTie => 2,
        _ => unreachable!("only untied-metric pairs become events"),
    };
    ((group as u32) << CLASS_BITS) | tag
}

fn unpack(event: u32) -> (usize, PairClass) {
    let class = match event & ((1 << CLASS_BITS) - 1) {
        0 => PairClass::Concordant,
        1 => PairClass::Discordant,
        _ => PairClass::HumanTie,
    };
    ((event >> CLASS_BITS) as usize, class)
}

/// Calls `f(group, gap, class)` for every within-group pair that is not
/// already a metric tie at `epsilon = 0`, in a fixed order.
fn for_each_untied_pair(groups: &[Group], eps_mode: EpsMode, mut f: impl FnMut(usize, f64, PairClass)) {
    for (g, group) in groups.iter().enumerate() {
        let (h, m) = (group.human.as_slice(), group.metric.as_slice());
        for i in 0..h.len() {
            for j in (i + 1)..h.len() {
                let gap = eps_mode.gap(m[i], m[j]);
                if gap > 0.0 {
                    let class = if h[i] == h[j] {
                        PairClass::HumanTie
                    } else if (h[i] < h[j]) == (m[i] < m[j]) {
                        PairClass::Concordant
                    } else {
                        PairClass::Discordant
                    };
                    f(g, gap, class);
                }
            }
        }
    }
}

/// Incremental evaluation of a statistic over ascending tie thresholds.
///
/// The sweep starts at `epsilon = 0`; each [`Sweep::advance`] moves to the
/// next candidate threshold and applies every pair whose gap is at most that
/// threshold, so the per-group counts always equal a fresh count at the
/// current threshold.
#[derive(Debug, Clone)]
pub struct Sweep {
    kind: StatKind,
    groups: Vec<Group>,
    counts: Vec<PairCounts>,
    values: Vec<StatValue>,
    running: RunningSum,
    used: usize,
    candidates: Vec<f64>,
    /// Events for candidate `c` are `events[offsets[c]..offsets[c + 1]]`.
    offsets: Vec<usize>,
    events: Vec<u32>,
    position: usize,
    touched: Vec<usize>,
    is_touched: Vec<bool>,
}

impl Sweep {
    /// A sweep over every distinct within-group gap.
    pub fn new(
        h: &ScoreMatrix,
        m: &ScoreMatrix,
        mode: GroupingMode,
        kind: StatKind,
        eps_mode: EpsMode,
    ) -> Result<Self> {
        let groups = Self::checked_groups(h, m, mode)?;
        let mut events: Vec<(f64, u32)> = Vec::new();
        for_each_untied_pair(&groups, eps_mode, |g, gap, class| events.push((gap, pack(g, class))));
        events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut candidates = Vec::new();
        let mut offsets = Vec::new();
        for (i, &(gap, _)) in events.iter().enumerate() {
            if candidates.last() != Some(&gap) {
                offsets.push(i);
                candidates.push(gap);
            }
        }
        offsets.push(events.len());
        let events = events.into_iter().map(|(_, e)| e).collect();
        Ok(Self::start(kind, groups, eps_mode, candidates, offsets, events))
    }

    /// A sweep whose candidate thresholds are the gaps of a uniform sample of
    /// `fraction` of all within-group pairs. Every pair is still applied at
    /// the first candidate reaching its gap.
    pub fn sampled(
        h: &ScoreMatrix,
        m: &ScoreMatrix,
        mode: GroupingMode,
        kind: StatKind,
        eps_mode: EpsMode,
        fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidSampleFraction(fraction));
        }
        let groups = Self::checked_groups(h, m, mode)?;
        let total: u64 = groups.iter().map(Group::pairs).sum();
        let total = usize::try_from(total)
            .map_err(|_| Error::InvalidArgument("too many pairs to sample on this platform".into()))?;
        let amount = ((fraction * total as f64).round() as usize).clamp(1, total.max(1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, total, amount).into_vec();
        picked.sort_unstable();

        // Pair indices count every within-group pair, tied or not, in the
        // order of a nested (group, i, j) loop.
        let mut candidates = Vec::with_capacity(picked.len());
        let mut next = picked.iter().peekable();
        let mut index = 0usize;
        for group in &groups {
            let m = group.metric.as_slice();
            for i in 0..m.len() {
                for j in (i + 1)..m.len() {
                    if next.peek() == Some(&&index) {
                        next.next();
                        let gap = eps_mode.gap(m[i], m[j]);
                        if gap > 0.0 {
                            candidates.push(gap);
                        }
                    }
                    index += 1;
                }
            }
        }
        candidates.sort_unstable_by(f64::total_cmp);
        candidates.dedup();

        let bucket_of = |gap: f64| candidates.partition_point(|&c| c < gap);
        let mut sizes = vec![0usize; candidates.len() + 1];
        for_each_untied_pair(&groups, eps_mode, |_, gap, _| sizes[bucket_of(gap)] += 1);
        let mut offsets = Vec::with_capacity(candidates.len() + 1);
        let mut acc = 0;
        for &s in &sizes[..candidates.len()] {
            offsets.push(acc);
            acc += s;
        }
        offsets.push(acc);
        let mut fill = offsets.clone();
        let mut events = vec![0u32; acc];
        for_each_untied_pair(&groups, eps_mode, |g, gap, class| {
            let b = bucket_of(gap);
            // Pairs beyond the largest sampled gap never become ties.
            if b < candidates.len() {
                events[fill[b]] = pack(g, class);
                fill[b] += 1;
            }
        });
        Ok(Self::start(kind, groups, eps_mode, candidates, offsets, events))
    }

    fn checked_groups(h: &ScoreMatrix, m: &ScoreMatrix, mode: GroupingMode) -> Result<Vec<Group>> {
        let groups = align(h, m, mode);
        if groups.iter().all(|g| g.pairs() == 0) {
            return Err(Error::NothingToCalibrate);
        }
        if groups.len() > MAX_GROUPS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_GROUPS} groups are supported"
            )));
        }
        Ok(groups)
    }

    fn start(
        kind: StatKind,
        groups: Vec<Group>,
        eps_mode: EpsMode,
        candidates: Vec<f64>,
        offsets: Vec<usize>,
        events: Vec<u32>,
    ) -> Self {
        let base = EpsilonPolicy {
            mode: eps_mode,
            epsilon: 0.0,
        };
        let counts = group_counts(&groups, base);
        let values: Vec<StatValue> = groups
            .iter()
            .zip(&counts)
            .map(|(g, c)| group_value(kind, g, c))
            .collect();
        let mut running = RunningSum::default();
        let mut used = 0;
        for v in values.iter().filter_map(|v| v.value()) {
            running.add(v);
            used += 1;
        }
        let n = groups.len();
        Self {
            kind,
            groups,
            counts,
            values,
            running,
            used,
            candidates,
            offsets,
            events,
            position: 0,
            touched: Vec::new(),
            is_touched: vec![false; n],
        }
    }

    /// The threshold the current counts correspond to.
    pub fn epsilon(&self) -> f64 {
        match self.position {
            0 => 0.0,
            p => self.candidates[p - 1],
        }
    }

    /// Candidate thresholds after zero, ascending.
    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_counts(&self) -> &[PairCounts] {
        &self.counts
    }

    pub fn total_pairs(&self) -> u64 {
        self.groups.iter().map(Group::pairs).sum()
    }

    /// Moves to the next candidate threshold and returns it, or `None` when
    /// every candidate has been visited.
    pub fn advance(&mut self) -> Option<f64> {
        let c = self.position;
        if c >= self.candidates.len() {
            return None;
        }
        for &event in &self.events[self.offsets[c]..self.offsets[c + 1]] {
            let (g, from) = unpack(event);
            let to = if from == PairClass::HumanTie {
                PairClass::JointTie
            } else {
                PairClass::MetricTie
            };
            self.counts[g].transfer(from, to, 1);
            if !self.is_touched[g] {
                self.is_touched[g] = true;
                self.touched.push(g);
            }
        }
        for g in self.touched.drain(..) {
            self.is_touched[g] = false;
            let new = group_value(self.kind, &self.groups[g], &self.counts[g]);
            if let Some(old) = self.values[g].value() {
                self.running.add(-old);
                self.used -= 1;
            }
            if let Some(v) = new.value() {
                self.running.add(v);
                self.used += 1;
            }
            self.values[g] = new;
        }
        self.position += 1;
        Some(self.epsilon())
    }

    /// The group mean from the running sum; within rounding of [`Sweep::value`].
    pub fn approximate_value(&self) -> StatValue {
        if self.used == 0 {
            StatValue::Undefined
        } else {
            StatValue::Defined(self.running.value() / self.used as f64)
        }
    }

    /// The group mean recomputed in group order, bit-identical to
    /// [`grouped_stat`](crate::grouped_stat) at the current threshold.
    pub fn value(&self) -> StatValue {
        mean_of_defined(self.values.iter().copied()).0
    }

    pub fn groups_used(&self) -> usize {
        self.used
    }
}

fn improves(candidate: StatValue, best: StatValue) -> bool {
    match (candidate, best) {
        (StatValue::Defined(c), StatValue::Defined(b)) => c > b,
        (StatValue::Defined(_), StatValue::Undefined) => true,
        _ => false,
    }
}

/// Finds the tie threshold maximising `cfg.kind`.
///
/// Candidates are zero and every observed within-group gap (or the gaps of a
/// sample of pairs). Ties in the maximum go to the smallest threshold. The
/// winning value is re-checked against a direct evaluation before returning.
pub fn calibrate(h: &ScoreMatrix, m: &ScoreMatrix, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    let mut sweep = if cfg.is_exact() {
        Sweep::new(h, m, cfg.mode, cfg.kind, cfg.eps_mode)?
    } else {
        Sweep::sampled(h, m, cfg.mode, cfg.kind, cfg.eps_mode, cfg.sample_fraction, cfg.seed)?
    };

    let mut best = sweep.value();
    let mut epsilon_star = 0.0;
    while let Some(eps) = sweep.advance() {
        let could_win = match (sweep.approximate_value(), best) {
            (StatValue::Undefined, _) => false,
            (StatValue::Defined(a), StatValue::Defined(b)) => a >= b - RUNNING_SUM_SLACK,
            (StatValue::Defined(_), StatValue::Undefined) => true,
        };
        if could_win {
            let exact = sweep.value();
            if improves(exact, best) {
                best = exact;
                epsilon_star = eps;
            }
        }
    }

    let policy = EpsilonPolicy {
        mode: cfg.eps_mode,
        epsilon: epsilon_star,
    };
    let report = apply_epsilon(h, m, cfg.mode, cfg.kind, policy);
    if report.value != best {
        return Err(Error::Verification {
            epsilon: epsilon_star,
            sweep: best.value(),
            direct: report.value.value(),
        });
    }
    Ok(CalibrationResult {
        epsilon_star,
        stat_star: best,
        candidates_evaluated: 1 + sweep.candidates().len(),
        exact: cfg.is_exact(),
        report,
        config: *cfg,
    })
}

/// Evaluates a statistic at a fixed threshold, e.g. one calibrated on
/// held-out data.
pub fn apply_epsilon(
    h: &ScoreMatrix,
    m: &ScoreMatrix,
    mode: GroupingMode,
    kind: StatKind,
    eps: EpsilonPolicy,
) -> CorrelationReport {
    crate::grouping::grouped_stat(h, m, mode, kind, eps)
}

/// Where in the metric's score range ties are introduced.
#[derive(Debug, Clone, PartialEq)]
pub struct TieHistogram {
    /// Lower edge of the first bin (smallest aligned metric score).
    pub lo: f64,
    /// Upper edge of the last bin (largest aligned metric score).
    pub hi: f64,
    /// Every within-group pair, binned by the mean of its two metric scores.
    pub all_pairs: Vec<u64>,
    /// Pairs tied at the given threshold but not at zero.
    pub newly_tied: Vec<u64>,
}

impl TieHistogram {
    pub fn bin_edges(&self) -> Vec<f64> {
        let bins = self.all_pairs.len();
        (0..=bins)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / bins as f64)
            .collect()
    }
}

pub fn tie_location_histogram(
    h: &ScoreMatrix,
    m: &ScoreMatrix,
    mode: GroupingMode,
    eps: EpsilonPolicy,
    bins: usize,
) -> Result<TieHistogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be at least 1".into()));
    }
    let groups = align(h, m, mode);
    let (lo, hi) = groups
        .iter()
        .flat_map(|g| g.metric.iter().copied())
        .fold(None, |acc: Option<(f64, f64)>, v| {
            Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))))
        })
        .unwrap_or((0.0, 0.0));
    let range = hi - lo;
    let bin_of = |x: f64| {
        if range == 0.0 {
            0
        } else {
            ((((x - lo) / range) * bins as f64).floor() as usize).min(bins - 1)
        }
    };
    let mut all_pairs = vec![0u64; bins];
    let mut newly_tied = vec![0u64; bins];
    for group in &groups {
        let ms = group.metric.as_slice();
        for i in 0..ms.len() {
            for j in (i + 1)..ms.len() {
                let b = bin_of(ms[i] / 2.0 + ms[j] / 2.0);
                all_pairs[b] += 1;
                let gap = eps.gap(ms[i], ms[j]);
                if gap > 0.0 && gap <= eps.epsilon {
                    newly_tied[b] += 1;
                }
            }
        }
    }
    Ok(TieHistogram {
        lo,
        hi,
        all_pairs,
        newly_tied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Row {
    pub epsilon: f64,
    pub ties_f1: StatValue,
    pub rank_f1: StatValue,
    pub acc_eq: StatValue,
}

/// Ties-F1, correct-rank-F1 and pairwise accuracy at each threshold of
/// `grid`, in ascending threshold order.
pub fn f1_curve(
    h: &ScoreMatrix,
    m: &ScoreMatrix,
    mode: GroupingMode,
    eps_mode: EpsMode,
    grid: &[f64],
) -> Result<Vec<F1Row>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    let mut policies = grid
        .iter()
        .map(|&e| EpsilonPolicy::new(eps_mode, e))
        .collect::<Result<Vec<_>>>()?;
    policies.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));

    let groups = align(h, m, mode);
    Ok(policies
        .into_iter()
        .map(|eps| {
            let counts = group_counts(&groups, eps);
            let value = |kind| report_from_counts(&groups, &counts, mode, kind, eps).value;
            F1Row {
                epsilon: eps.epsilon,
                ties_f1: value(StatKind::TiesF1),
                rank_f1: value(StatKind::RankF1),
                acc_eq: value(StatKind::AccEq),
            }
        })
        .collect())
}
