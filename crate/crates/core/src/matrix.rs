use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Scores keyed by `(system, segment)`.
///
/// Iteration is always in lexicographic `(system, segment)` order, so nothing
/// computed from a matrix depends on the order entries were inserted in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMatrix {
    by_system: BTreeMap<String, BTreeMap<String, f64>>,
    len: usize,
}

impl ScoreMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a finite score; duplicate keys are an error.
    pub fn insert(
        &mut self,
        system: impl Into<String>,
        segment: impl Into<String>,
        score: f64,
    ) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::NonFinite {
                index: self.len,
                value: score,
            });
        }
        let system = system.into();
        let segment = segment.into();
        let row = self.by_system.entry(system.clone()).or_default();
        match row.entry(segment) {
            Entry::Occupied(e) => Err(Error::DuplicateEntry {
                system,
                segment: e.key().clone(),
            }),
            Entry::Vacant(e) => {
                e.insert(score);
                self.len += 1;
                Ok(())
            }
        }
    }

    pub fn get(&self, system: &str, segment: &str) -> Option<f64> {
        self.by_system.get(system)?.get(segment).copied()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn systems(&self) -> impl Iterator<Item = &str> {
        self.by_system.keys().map(String::as_str)
    }

    pub fn segments(&self) -> BTreeSet<&str> {
        self.by_system
            .values()
            .flat_map(|row| row.keys().map(String::as_str))
            .collect()
    }

    /// `(system, segment, score)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.by_system.iter().flat_map(|(sys, row)| {
            row.iter()
                .map(move |(seg, &score)| (sys.as_str(), seg.as_str(), score))
        })
    }

    /// Applies `f` to every score, keeping the keys.
    pub fn map_scores(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let by_system = self
            .by_system
            .iter()
            .map(|(sys, row)| {
                let row = row.iter().map(|(seg, &v)| (seg.clone(), f(v))).collect();
                (sys.clone(), row)
            })
            .collect();
        Self {
            by_system,
            len: self.len,
        }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.iter().map(|(_, _, v)| v).fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

impl<S: Into<String>, T: Into<String>> FromIterator<(S, T, f64)> for ScoreMatrix {
    /// Panics on duplicate keys or non-finite scores; use
    /// [`ScoreMatrix::insert`] for fallible construction.
    fn from_iter<I: IntoIterator<Item = (S, T, f64)>>(iter: I) -> Self {
        let mut m = ScoreMatrix::new();
        for (sys, seg, v) in iter {
            m.insert(sys, seg, v).expect("valid score matrix entry");
        }
        m
    }
}
