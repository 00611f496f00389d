//! Crate-wide error type wrapping the per-module errors.

use thiserror::Error;

use crate::chsh::ChshError;
use crate::franson::FransonError;
use crate::link::LinkError;
use crate::scenario::ScenarioError;
use crate::spectral::SpectralError;
use crate::telemetry::TelemetryError;
use crate::timetag::TimetagError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Franson(#[from] FransonError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Timetag(#[from] TimetagError),
    #[error(transparent)]
    Chsh(#[from] ChshError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
