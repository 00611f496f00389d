//! Franson interferometry with programmable cosine spectral filters.
//!
//! Each arm's filter multiplies one photon's spectrum by
//! `envelope(ν)·cos(πτ(ν−νc) + B)`. The cosine splits the photon into
//! components advanced and delayed by τ/2, so coincidences show peaks at
//! relative delays −τ, 0 and +τ. Only the central (short-short plus
//! long-long) peak depends on the phases.
//!
//! Relative delay is `t_idler − t_signal` throughout, matching the
//! `t_B − t_A` convention of [`crate::timetag::correlate`] when the
//! signal photon goes to arm A.

mod coincidence;
mod filter;

pub use coincidence::{
    postselect_central_peak, postselect_window, time_domain_coincidences, CoincidenceDistribution, PeakRecord,
    ThreePeakWeights,
};
pub use filter::{
    apply_filters, make_cosine_filter, read_filter_csv, write_filter_csv, Envelope, FilterProfile, ALT_TAU_S,
    DEFAULT_TAU_S,
};

use thiserror::Error;

use crate::spectral::SpectralError;

#[derive(Debug, Error, PartialEq)]
pub enum FransonError {
    #[error("degenerate filter: envelope width {width_hz:.4e} Hz holds fewer than two fringes of period {period_hz:.4e} Hz")]
    DegenerateFilter { width_hz: f64, period_hz: f64 },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate visibility denominator ({0:.4e})")]
    DegenerateDenominator(f64),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("window {window_s:.3e} s overlaps side peaks separated by {separation_s:.3e} s")]
    WindowOverlapsSidePeaks { window_s: f64, separation_s: f64 },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("malformed filter csv: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FransonError {
    fn from(e: std::io::Error) -> Self {
        FransonError::Io(e.to_string())
    }
}

/// Post-selected coincidence probability ½(1 + cos 2θ) for total phase θ.
pub fn coincidence_probability(theta: f64) -> f64 {
    0.5 * (1.0 + (2.0 * theta).cos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    /// (C₀ − C_{π/2}) / (C₀ + C_{π/2}).
    pub raw: f64,
    /// (C₀ − C_{π/2}) / (C₀ + C_{π/2} − 2C_acc).
    pub corrected: f64,
    /// Set when either value exceeds 1; values are reported unclamped.
    pub exceeds_unity: bool,
}

/// Fringe visibility from maximum, minimum and accidental counts.
pub fn visibility(c_max: f64, c_min: f64, c_acc: f64) -> Result<Visibility, FransonError> {
    if !(c_min >= 0.0 && c_max >= c_min && c_acc >= 0.0) {
        return Err(FransonError::InvalidCounts(format!(
            "need c_max >= c_min >= 0 and c_acc >= 0, got {c_max}, {c_min}, {c_acc}"
        )));
    }
    let sum = c_max + c_min;
    if sum <= 0.0 {
        return Err(FransonError::DegenerateDenominator(sum));
    }
    let corrected_den = sum - 2.0 * c_acc;
    if corrected_den <= 0.0 {
        return Err(FransonError::DegenerateDenominator(corrected_den));
    }
    let raw = (c_max - c_min) / sum;
    let corrected = (c_max - c_min) / corrected_den;
    Ok(Visibility { raw, corrected, exceeds_unity: raw > 1.0 || corrected > 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coincidence_probability_values() {
        assert_eq!(coincidence_probability(0.0), 1.0);
        assert!(coincidence_probability(PI / 2.0).abs() < 1e-15);
        assert!((coincidence_probability(PI / 4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn visibility_forms() {
        let v = visibility(100.0, 0.0, 0.0).unwrap();
        assert_eq!(v.raw, 1.0);
        assert_eq!(v.corrected, 1.0);
        assert!(!v.exceeds_unity);
        let v = visibility(1000.0, 40.0, 10.0).unwrap();
        assert!((v.raw - 960.0 / 1040.0).abs() < 1e-15);
        assert!((v.corrected - 960.0 / 1020.0).abs() < 1e-15);
        let v = visibility(100.0, 10.0, 30.0).unwrap();
        assert!(v.exceeds_unity && v.corrected > 1.0);
        assert!(matches!(visibility(0.0, 0.0, 0.0), Err(FransonError::DegenerateDenominator(_))));
        assert!(matches!(visibility(1.0, 2.0, 0.0), Err(FransonError::InvalidCounts(_))));
    }
}
