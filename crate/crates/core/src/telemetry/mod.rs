//! Link telemetry analytics: window resampling with outlier rejection,
//! Pearson correlation with least-squares lines, threshold-split fits and
//! thermal drift sensitivities.

mod fixtures;
mod io;
mod report;
mod resample;
mod series;
mod stats;

pub use fixtures::{moments_matched_pairs, moments_matched_series, split_fixture, FixtureSpec};
pub use io::{read_series_csv, read_telemetry_csv, write_series_csv, write_telemetry_csv, TelemetryTable};
pub use report::{render_table, write_report_csv};
pub use resample::{mad_filter, resample, resample_and_align, AlignedPairs, OutlierPolicy, DEFAULT_WINDOW_S};
pub use series::TimeSeries;
pub use stats::{
    best_split_threshold, cross_correlation_at_lag, drift_sensitivity, pearson, split_threshold_fit,
    CorrelationReport, DriftSensitivity, FitSummary, SplitRecord, Strength,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TelemetryError {
    #[error("timestamps must be strictly increasing (index {0})")]
    NonMonotonic(usize),
    #[error("series {0} has mismatched time and value lengths")]
    LengthMismatch(String),
    #[error("infinite value at index {0}")]
    NonFinite(usize),
    #[error("series do not overlap in time")]
    NoOverlap,
    #[error("need at least {need} pairs, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("zero variance on the {0} axis")]
    DegenerateVariance(&'static str),
    #[error("{side} side of threshold {threshold} has only {count} pairs")]
    InsufficientSideSamples { side: &'static str, threshold: f64, count: usize },
    #[error("series are not aligned sample by sample")]
    Misaligned,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TelemetryError {
    fn from(e: std::io::Error) -> Self {
        TelemetryError::Io(e.to_string())
    }
}
