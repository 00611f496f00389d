//! Time-tag streams: synthetic generation from detector and clock models,
//! tag-file ingestion, coincidence histograms, Gaussian peak fits, CAR and
//! peak-drift tracking.
//!
//! Tags are integer picoseconds. Histogram delays are `t_B − t_A`.

mod analysis;
mod clock;
mod fit;
mod generate;
mod histogram;
mod models;
mod stream;

pub use analysis::{
    car, epoch_histograms, peak_center, segment_triple_peak, track_peak_drift, CarResult, DriftRecord, PeakMode, TriplePeak,
};
pub use clock::apply_clock;
pub use fit::{fit_gaussian, fit_gaussian_in_window, fit_gaussian_points, GaussianFit};
pub use generate::{generate_events, generate_pair_streams, DelayModel, PairSource};
pub use histogram::{
    correlate, correlate_chunked, read_histogram_csv, write_histogram_csv, CoincidenceHistogram,
    HistogramAccumulator,
};
pub use models::{ClockModel, DetectorModel};
pub use stream::{read_tag_file, write_tag_file, Origin, TimeTagStream};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TimetagError {
    #[error("tags are not strictly increasing at index {0}")]
    UnsortedInput(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("signal and accidental windows overlap")]
    WindowsOverlap,
    #[error("histograms differ in binning")]
    HistogramMismatch,
    #[error("malformed file: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TimetagError {
    fn from(e: std::io::Error) -> Self {
        TimetagError::Io(e.to_string())
    }
}

/// Rounds `x` to an integer, up with probability equal to its fractional
/// part, so that the rounding is unbiased on average.
pub(crate) fn stochastic_round<R: rand::Rng>(x: f64, rng: &mut R) -> i64 {
    let f = x.floor();
    let frac = x - f;
    let up = frac > 0.0 && rng.random::<f64>() < frac;
    f as i64 + up as i64
}
