//! The 3x3 coefficient-table formulation of pairwise statistics.
//!
//! Each unordered pair falls into one cell indexed by how the human scores
//! relate (`<`, `=`, `>`) and how the metric scores relate. A statistic is a
//! table of coefficients in `{-1, 0, +1}` or `Excluded`, evaluated as
//! `sum(coef * count) / sum(count)` over the non-excluded cells.

use crate::counts::PairCounts;
use crate::error::{Error, Result};
use crate::score::{EpsilonPolicy, ScoreVector};
use crate::stats::{Fraction, StatKind, StatValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Less, Relation::Equal, Relation::Greater];

    fn index(self) -> usize {
        match self {
            Relation::Less => 0,
            Relation::Equal => 1,
            Relation::Greater => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coefficient {
    Minus,
    Zero,
    Plus,
    Excluded,
}

impl Coefficient {
    fn weight(self) -> Option<i128> {
        match self {
            Coefficient::Minus => Some(-1),
            Coefficient::Zero => Some(0),
            Coefficient::Plus => Some(1),
            Coefficient::Excluded => None,
        }
    }
}

/// Coefficients indexed by `[human relation][metric relation]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoefficientTable {
    entries: [[Coefficient; 3]; 3],
}

impl CoefficientTable {
    pub fn new(entries: [[Coefficient; 3]; 3]) -> Result<Self> {
        if entries.iter().flatten().all(|c| *c == Coefficient::Excluded) {
            return Err(Error::EmptyTable);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, human: Relation, metric: Relation) -> Coefficient {
        self.entries[human.index()][metric.index()]
    }

    /// The coefficient table for `kind`, if it has one. Only statistics whose
    /// value is a linear ratio over the nine cells have a table.
    pub fn for_kind(kind: StatKind) -> Option<Self> {
        use Coefficient::{Excluded as X, Minus as M, Plus as P, Zero as Z};
        let entries = match kind {
            StatKind::Tau10 => [[P, M, M], [X, X, X], [M, M, P]],
            StatKind::Tau13 => [[P, X, M], [X, X, X], [M, X, P]],
            StatKind::Tau14 => [[P, Z, M], [X, X, X], [M, Z, P]],
            StatKind::TauEq => [[P, M, M], [M, P, M], [M, M, P]],
            StatKind::AccEq => [[P, Z, Z], [Z, P, Z], [Z, Z, P]],
            _ => return None,
        };
        Some(Self { entries })
    }
}

/// Pair counts per table cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCounts([[u64; 3]; 3]);

impl CellCounts {
    pub fn new(cells: [[u64; 3]; 3]) -> Self {
        Self(cells)
    }

    pub fn get(&self, human: Relation, metric: Relation) -> u64 {
        self.0[human.index()][metric.index()]
    }

    /// Tallies every pair `i < j` by `(cmp(h_i, h_j), cmp(m_i, m_j))`, with
    /// the metric relation `=` whenever the pair is tied under `eps`.
    pub fn from_scores(h: &ScoreVector, m: &ScoreVector, eps: EpsilonPolicy) -> Result<Self> {
        if h.len() != m.len() {
            return Err(Error::LengthMismatch {
                human: h.len(),
                metric: m.len(),
            });
        }
        let rel = |a: f64, b: f64| {
            if a < b {
                Relation::Less
            } else if a > b {
                Relation::Greater
            } else {
                Relation::Equal
            }
        };
        let mut cells = [[0u64; 3]; 3];
        for i in 0..h.len() {
            for j in (i + 1)..h.len() {
                let hr = rel(h[i], h[j]);
                let mr = if eps.ties(m[i], m[j]) {
                    Relation::Equal
                } else {
                    rel(m[i], m[j])
                };
                cells[hr.index()][mr.index()] += 1;
            }
        }
        Ok(Self(cells))
    }

    /// Spreads pair-class counts over the cells they map to: concordant pairs
    /// over `(<,<)` and `(>,>)`, discordant over `(<,>)` and `(>,<)`,
    /// human-only ties over `(=,<)` and `(=,>)`, metric-only ties over
    /// `(<,=)` and `(>,=)`, joint ties into `(=,=)`. Each split puts the
    /// larger half in the first cell.
    pub fn from_pair_counts(c: &PairCounts) -> Self {
        let split = |v: u64| (v - v / 2, v / 2);
        let (c_lo, c_hi) = split(c.concordant);
        let (d_lo, d_hi) = split(c.discordant);
        let (th_lo, th_hi) = split(c.human_ties);
        let (tm_lo, tm_hi) = split(c.metric_ties);
        Self([
            [c_lo, tm_lo, d_lo],
            [th_lo, c.joint_ties, th_hi],
            [d_hi, tm_hi, c_hi],
        ])
    }

    /// Collapses cells back into pair classes.
    pub fn to_pair_counts(&self) -> PairCounts {
        use Relation::*;
        let cell = |h, m| self.get(h, m);
        PairCounts {
            concordant: cell(Less, Less) + cell(Greater, Greater),
            discordant: cell(Less, Greater) + cell(Greater, Less),
            human_ties: cell(Equal, Less) + cell(Equal, Greater),
            metric_ties: cell(Less, Equal) + cell(Greater, Equal),
            joint_ties: cell(Equal, Equal),
        }
    }
}

/// `sum(coef * count) / sum(count)` over non-excluded cells.
pub fn stat_from_table(table: &CoefficientTable, cells: &CellCounts) -> StatValue {
    let mut num = 0i128;
    let mut den = 0i128;
    for h in Relation::ALL {
        for m in Relation::ALL {
            if let Some(w) = table.get(h, m).weight() {
                let s = cells.get(h, m) as i128;
                num += w * s;
                den += s;
            }
        }
    }
    Fraction::new(num, den).map(Fraction::to_f64).into()
}
