//! Score vectors and the metric tie rule.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence of finite scores.
///
/// NaN and infinities are rejected at construction, so every downstream
/// comparison is a total order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Number of distinct values (exact equality).
    pub fn unique_count(&self) -> usize {
        let mut sorted = self.0.clone();
        sorted.sort_by(f64::total_cmp);
        // -0.0 and 0.0 compare equal, so dedup on `==` rather than bit patterns.
        sorted.dedup_by(|a, b| a == b);
        sorted.len()
    }
}

impl Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// How the gap between two metric scores is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsMode {
    /// `|a - b|`
    #[default]
    Absolute,
    /// `|a - b| / max(|a|, |b|)`, zero when both scores are zero.
    Relative,
}

impl EpsMode {
    #[inline]
    pub fn gap(self, a: f64, b: f64) -> f64 {
        let diff = (a - b).abs();
        match self {
            EpsMode::Absolute => diff,
            EpsMode::Relative => {
                if diff == 0.0 {
                    0.0
                } else {
                    diff / a.abs().max(b.abs())
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EpsMode::Absolute => "absolute",
            EpsMode::Relative => "relative",
        }
    }
}

impl fmt::Display for EpsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EpsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" | "abs" => Ok(EpsMode::Absolute),
            "relative" | "rel" => Ok(EpsMode::Relative),
            _ => Err(Error::UnknownEpsMode(s.to_string())),
        }
    }
}

/// The rule deciding when two metric scores count as tied.
///
/// Two scores are tied iff their gap (per [`EpsMode`]) is `<= epsilon`, so an
/// epsilon of zero still ties exactly-equal scores. Human scores are never
/// subject to this rule; they tie only on exact equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolicy {
    pub mode: EpsMode,
    pub epsilon: f64,
}

impl EpsilonPolicy {
    pub fn new(mode: EpsMode, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(Self { mode, epsilon })
    }

    /// Absolute tie rule with `epsilon = 0`: only exact equality ties.
    pub const fn exact() -> Self {
        Self {
            mode: EpsMode::Absolute,
            epsilon: 0.0,
        }
    }

    pub fn absolute(epsilon: f64) -> Result<Self> {
        Self::new(EpsMode::Absolute, epsilon)
    }

    pub fn relative(epsilon: f64) -> Result<Self> {
        Self::new(EpsMode::Relative, epsilon)
    }

    #[inline]
    pub fn gap(&self, a: f64, b: f64) -> f64 {
        self.mode.gap(a, b)
    }

    #[inline]
    pub fn ties(&self, a: f64, b: f64) -> bool {
        self.gap(a, b) <= self.epsilon
    }
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        Self::exact()
    }
}
