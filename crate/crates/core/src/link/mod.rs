//! Channel models: fiber loss and chromatic dispersion, dispersion
//! pre-compensation, thermal time-of-flight drift, polarization drift and
//! fidelity, and free-space turbulence metrics.

mod fiber;
mod sop;
mod tof;
mod turbulence;

pub use fiber::{
    apply_compensation, apply_dispersion, apply_spectral_phase, attenuate, compensation_phase, dispersion_phase,
    group_delay_ps, FiberLink, D_EXPERIMENT, D_SMF28,
};
pub use sop::{
    compensation_events, fidelity_trace, sop_fidelity, CompensationEvent, SopDriftModel, StokesSample,
    COMPENSATION_THRESHOLD,
};
pub use tof::{tof_drift_series, TOF_AERIAL, TOF_BURIED, TOF_GRIFFISS};
pub use turbulence::{classify_turbulence, scintillation_index, Regime, TurbulenceReport, TurbulenceSample};

use thiserror::Error;

use crate::spectral::SpectralError;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("invalid link: {0}")]
    InvalidLink(String),
    #[error("stokes vector is not normalized (|s| = {0:.8})")]
    NotNormalized(f64),
    #[error("empty series")]
    EmptySeries,
    #[error("intensity series has zero mean")]
    ZeroMean,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
