//! Simulation and analysis of telecom-band energy-time entanglement links.
//!
//! The crate follows a photon pair from its source to the analysis bench:
//!
//! - [`spectral`]: joint spectral amplitude of a four-wave-mixing waveguide
//!   source and its Schmidt purity.
//! - [`franson`]: cosine spectral filters acting as a Franson
//!   interferometer, the three-peak delay distribution and visibilities.
//! - [`link`]: fiber attenuation and dispersion, dispersion
//!   pre-compensation, temperature-driven time-of-flight drift,
//!   polarization drift and free-space turbulence metrics.
//! - [`timetag`]: synthetic detector and clock models, tag streams,
//!   coincidence histograms, Gaussian fits, CAR and drift tracking.
//! - [`chsh`]: CHSH angle schedules, fringe fits, correlators, score and
//!   significance, and the end-to-end experiment runner.
//! - [`telemetry`]: resampling, Pearson correlation and split fits for
//!   link telemetry.
//! - [`scenario`] and [`cli`]: TOML scenarios and the `qlan` command line.

pub mod chsh;
pub mod cli;
pub mod error;
pub mod franson;
pub mod link;
pub mod parallel;
pub mod scenario;
pub mod spectral;
pub mod telemetry;
pub mod timetag;
pub mod units;

pub use error::{Error, Result};
