use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {human} human scores vs {metric} metric scores")]
    LengthMismatch { human: usize, metric: usize },

    #[error("score at position {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),

    #[error("sample fraction must lie in (0, 1], got {0}")]
    InvalidSampleFraction(f64),

    #[error("unknown statistic `{0}`")]
    UnknownStat(String),

    #[error("unknown grouping mode `{0}`")]
    UnknownMode(String),

    #[error("unknown epsilon mode `{0}`")]
    UnknownEpsMode(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient table has every entry excluded")]
    EmptyTable,

    #[error("nothing to calibrate: no group has two or more aligned scores")]
    NothingToCalibrate,

    #[error("duplicate entry for ({system}, {segment})")]
    DuplicateEntry { system: String, segment: String },

    #[error("{path}:{line}:{column}: {reason}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("{path}:{line}: duplicate entry for ({system}, {segment}), first seen on line {first_line}")]
    DuplicateKey {
        path: String,
        line: usize,
        first_line: usize,
        system: String,
        segment: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("calibration self-check failed: sweep gave {sweep:?} but direct evaluation gave {direct:?} at epsilon {epsilon}")]
    Verification {
        epsilon: f64,
        sweep: Option<f64>,
        direct: Option<f64>,
    },
}
