//! Biphoton joint spectral amplitude of a spiral-waveguide four-wave-mixing
//! source: construction, marginals, Schmidt purity and text export.
//!
//! Frequencies are angular (rad/s) throughout. The signal photon indexes
//! matrix rows and the idler photon indexes columns.

mod dispersion;
mod grid;
mod io;
mod jsa;
mod pump;
mod purity;

pub use dispersion::{effective_phase_mismatch, WaveguideDispersion};
pub use grid::FrequencyGrid;
pub use io::{read_jsa_text, write_jsi_csv, write_jsa_text, write_marginals_csv};
pub use jsa::{compute_jsa, marginals, Axis, AxisWeights, JointSpectralAmplitude, Marginals};
pub use pump::PumpSpectrum;
pub use purity::{schmidt_coefficients, spectral_purity, SINGULAR_VALUE_CUTOFF};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("invalid pump spectrum: {0}")]
    InvalidPump(String),
    #[error("invalid waveguide dispersion: {0}")]
    InvalidDispersion(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("amplitude is not normalized (norm {norm:.3e})")]
    NotNormalized { norm: f64 },
    #[error("amplitude contains non-finite values")]
    NonFinite,
    #[error("malformed amplitude file: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpectralError {
    fn from(e: std::io::Error) -> Self {
        SpectralError::Io(e.to_string())
    }
}
