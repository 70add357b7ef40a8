//! Correlation and accuracy statistics computed from [`PairCounts`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counts::PairCounts;
use crate::error::{Error, Result};

/// Every statistic that can be computed from pair counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatKind {
    TauA,
    TauB,
    TauC,
    Tau10,
    Tau13,
    Tau14,
    TauEq,
    AccEq,
    TiesPrecision,
    TiesRecall,
    TiesF1,
    RankPrecision,
    RankRecall,
    RankF1,
}

impl StatKind {
    pub const ALL: [StatKind; 14] = [
        StatKind::TauA,
        StatKind::TauB,
        StatKind::TauC,
        StatKind::Tau10,
        StatKind::Tau13,
        StatKind::Tau14,
        StatKind::TauEq,
        StatKind::AccEq,
        StatKind::TiesPrecision,
        StatKind::TiesRecall,
        StatKind::TiesF1,
        StatKind::RankPrecision,
        StatKind::RankRecall,
        StatKind::RankF1,
    ];

    /// The Kendall variants and pairwise accuracy.
    pub const CORRELATIONS: [StatKind; 8] = [
        StatKind::TauA,
        StatKind::TauB,
        StatKind::TauC,
        StatKind::Tau10,
        StatKind::Tau13,
        StatKind::Tau14,
        StatKind::TauEq,
        StatKind::AccEq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatKind::TauA => "tau_a",
            StatKind::TauB => "tau_b",
            StatKind::TauC => "tau_c",
            StatKind::Tau10 => "tau_10",
            StatKind::Tau13 => "tau_13",
            StatKind::Tau14 => "tau_14",
            StatKind::TauEq => "tau_eq",
            StatKind::AccEq => "acc_eq",
            StatKind::TiesPrecision => "ties_p",
            StatKind::TiesRecall => "ties_r",
            StatKind::TiesF1 => "ties_f1",
            StatKind::RankPrecision => "rank_p",
            StatKind::RankRecall => "rank_r",
            StatKind::RankF1 => "rank_f1",
        }
    }

    /// Kendall-style statistics, valued in `[-1, 1]`.
    pub fn is_tau(self) -> bool {
        matches!(
            self,
            StatKind::TauA
                | StatKind::TauB
                | StatKind::TauC
                | StatKind::Tau10
                | StatKind::Tau13
                | StatKind::Tau14
                | StatKind::TauEq
        )
    }

    /// Whether the statistic rewards correctly predicted ties as much as it
    /// penalises wrongly predicted ones. Calibrating anything else can trade
    /// discordant pairs for ties.
    pub fn rewards_ties(self) -> bool {
        matches!(self, StatKind::AccEq | StatKind::TauEq)
    }

    /// The exact value as a ratio of integers, or `None` when the statistic
    /// is undefined or (for `tau_b`) irrational.
    ///
    /// `k` and `n` are only read by `tau_c`.
    pub fn fraction(self, c: &PairCounts, k: u64, n: u64) -> Option<Fraction> {
        let con = c.concordant as i128;
        let dis = c.discordant as i128;
        let th = c.human_ties as i128;
        let tm = c.metric_ties as i128;
        let thm = c.joint_ties as i128;
        let all = con + dis + th + tm + thm;
        let (num, den) = match self {
            StatKind::TauA => (con - dis, all),
            StatKind::TauB => return None,
            StatKind::TauC => {
                let (k, n) = (k as i128, n as i128);
                ((con - dis) * k, n * n * (k - 1))
            }
            StatKind::Tau10 => (con - dis - tm, con + dis + tm),
            StatKind::Tau13 => (con - dis, con + dis),
            StatKind::Tau14 => (con - dis, con + dis + tm),
            StatKind::TauEq => (con + thm - dis - th - tm, all),
            StatKind::AccEq => (con + thm, all),
            StatKind::TiesPrecision => (thm, thm + tm),
            StatKind::TiesRecall => (thm, thm + th),
            StatKind::RankPrecision => (con, con + dis + th),
            StatKind::RankRecall => (con, con + dis + tm),
            // Harmonic mean of precision and recall; undefined if either
            // side is, or if both are zero.
            StatKind::TiesF1 => {
                if thm == 0 || thm + tm == 0 || thm + th == 0 {
                    return None;
                }
                (2 * thm, 2 * thm + tm + th)
            }
            StatKind::RankF1 => {
                if con == 0 || con + dis + th == 0 || con + dis + tm == 0 {
                    return None;
                }
                (2 * con, 2 * (con + dis) + th + tm)
            }
        };
        Fraction::new(num, den)
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        StatKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::UnknownStat(s.to_string()))
    }
}

/// An exact ratio with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub numerator: i128,
    pub denominator: i128,
}

impl Fraction {
    pub fn new(numerator: i128, denominator: i128) -> Option<Self> {
        (denominator > 0).then_some(Self {
            numerator,
            denominator,
        })
    }

    /// Correctly rounded while both parts are below 2^53 in magnitude.
    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// A statistic's value, or `Undefined` when a denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StatValue {
    Defined(f64),
    #[default]
    Undefined,
}

impl StatValue {
    pub fn value(self) -> Option<f64> {
        match self {
            StatValue::Defined(v) => Some(v),
            StatValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, StatValue::Defined(_))
    }
}

impl From<Option<f64>> for StatValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(StatValue::Undefined, StatValue::Defined)
    }
}

impl fmt::Display for StatValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatValue::Defined(v) => write!(f, "{v}"),
            StatValue::Undefined => f.write_str("NaN"),
        }
    }
}

/// Evaluates `kind` on pair counts.
///
/// `k` (the smaller number of distinct values among the two score vectors)
/// and `n` (the number of observations) are used by `tau_c` only.
pub fn stat_from_counts(kind: StatKind, counts: &PairCounts, k: u64, n: u64) -> StatValue {
    if kind == StatKind::TauB {
        let c = counts;
        let num = c.concordant as f64 - c.discordant as f64;
        let left = (c.concordant + c.discordant + c.human_ties) as f64;
        let right = (c.concordant + c.discordant + c.metric_ties) as f64;
        let den = (left * right).sqrt();
        return if den > 0.0 {
            StatValue::Defined(num / den)
        } else {
            StatValue::Undefined
        };
    }
    kind.fraction(counts, k, n).map(Fraction::to_f64).into()
}
