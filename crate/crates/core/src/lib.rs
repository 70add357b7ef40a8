//! Rank-based meta-evaluation of automatic quality metrics against human judgments.
//!
//! The crate computes the pairwise sufficient statistics of two score vectors
//! (concordant, discordant, and the three kinds of tied pairs), every Kendall
//! tau variant that has been used to meta-evaluate metrics, pairwise accuracy
//! with ties, and class-specific precision/recall/F1 for tie prediction.
//!
//! On top of that it provides segment-level aggregation over grouped score
//! matrices ([`grouping`]) and tie calibration ([`calibration`]): a sweep over
//! every observed metric score gap that finds the threshold `epsilon` below
//! which two metric scores are treated as tied.
//!
//! ```
//! use tiecal_core::{suff_stats, stat_from_counts, EpsilonPolicy, ScoreVector, StatKind};
//!
//! let human = ScoreVector::new(vec![0.0, 0.0, 0.0, 0.0, 1.0, 2.0])?;
//! let metric = ScoreVector::new(vec![0.0, 0.0, 0.0, 0.0, 2.0, 1.0])?;
//! let counts = suff_stats(&human, &metric, EpsilonPolicy::exact())?;
//! assert_eq!((counts.concordant, counts.discordant, counts.joint_ties), (8, 1, 6));
//!
//! let acc = stat_from_counts(StatKind::AccEq, &counts, 3, 6);
//! assert_eq!(acc.value(), Some(14.0 / 15.0));
//! # Ok::<(), tiecal_core::Error>(())
//! ```

pub mod calibration;
pub mod classic;
pub mod counts;
pub mod error;
pub mod grouping;
pub mod io;
pub mod matrix;
pub mod perturb;
pub mod score;
pub mod stats;
pub mod table;

pub use calibration::{
    apply_epsilon, calibrate, f1_curve, tie_location_histogram, CalibrationConfig,
    CalibrationResult, F1Row, Sweep, TieHistogram,
};
pub use classic::{pearson, spearman};
pub use counts::{suff_stats, suff_stats_enumerate, PairCounts, PairClass};
pub use error::{Error, Result};
pub use io::{
    format_stat, load_scores, parse_scores, rank_metrics, write_report, write_scores, CampaignFile,
    Format, InputDigest, MetricEntry, ReportDocument, Role,
};
pub use grouping::{
    align, bucket_curve, bucketize, grouped_stat, BucketRow, CorrelationReport, Group,
    GroupingMode,
};
pub use matrix::ScoreMatrix;
pub use perturb::break_ties_randomly;
pub use score::{EpsMode, EpsilonPolicy, ScoreVector};
pub use stats::{stat_from_counts, Fraction, StatKind, StatValue};
pub use table::{stat_from_table, CellCounts, Coefficient, CoefficientTable, Relation};
