//! CHSH scoring for energy-time entanglement measured through a pair of
//! programmable Franson filters: angle schedules, correlators with both
//! variance forms, the score and its significance, fringe fits, the
//! visibility bound, and a full sweep orchestrator.

mod fringe;
mod run;

pub use fringe::{fit_fringe, FringeFit, FringeFitOptions};
pub use run::{
    run_chsh, write_fringe_csv, write_report, ChshReport, ChshSetup, ClockSetup, FringePoint, RunMode, SweepRecord,
    SweepSchedule,
};

use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::franson::FransonError;
use crate::spectral::SpectralError;
use crate::timetag::TimetagError;

/// 2√2.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum ChshError {
    #[error("correlator has zero total counts")]
    ZeroTotal,
    #[error("negative count {0}")]
    NegativeCount(f64),
    #[error("fringe fit failed: {0}")]
    FitDiverged(String),
    #[error("invalid angle schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error("{context}: {source}")]
    Franson { context: String, source: FransonError },
    #[error("{context}: {source}")]
    Spectral { context: String, source: SpectralError },
    #[error("{context}: {source}")]
    Timetag { context: String, source: TimetagError },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ChshError {
    fn from(e: std::io::Error) -> Self {
        ChshError::Io(e.to_string())
    }
}

/// Analyzer angles in degrees, in the polarizer picture where
/// coincidences follow cos²(α − β). Perpendicular settings are derived
/// as angle + 90°. `signs` multiply E(α,β), E(α,β′), E(α′,β), E(α′,β′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSchedule {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub signs: [f64; 4],
}

impl AngleSchedule {
    /// α = 0°, β = 22.5°, α′ = 45°, β′ = 67.5° with S = |E0 − E1 + E2 + E3|.
    pub fn canonical() -> Self {
        Self { alpha: 0.0, alpha_prime: 45.0, beta: 22.5, beta_prime: 67.5, signs: [1.0, -1.0, 1.0, 1.0] }
    }

    /// Phase angles 0, π/2 (A) and ±π/4 (B), i.e. half those in the
    /// polarizer picture, scored as |E0 + E1 + E2 − E3|.
    pub fn alternate() -> Self {
        Self { alpha: 0.0, alpha_prime: 45.0, beta: 22.5, beta_prime: -22.5, signs: [1.0, 1.0, 1.0, -1.0] }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "canonical" => Some(Self::canonical()),
            "alternate" => Some(Self::alternate()),
            _ => None,
        }
    }

    pub fn rotated(&self, delta_deg: f64) -> Self {
        Self {
            alpha: self.alpha + delta_deg,
            alpha_prime: self.alpha_prime + delta_deg,
            beta: self.beta + delta_deg,
            beta_prime: self.beta_prime + delta_deg,
            signs: self.signs,
        }
    }

    pub fn validate(&self) -> Result<(), ChshError> {
        let same = |x: f64, y: f64| ((x - y).rem_euclid(180.0)).min((y - x).rem_euclid(180.0)) < 1e-9;
        if same(self.alpha, self.alpha_prime) || same(self.beta, self.beta_prime) {
            return Err(ChshError::InvalidSchedule("settings must be distinct".into()));
        }
        if self.signs.iter().any(|s| s.abs() != 1.0) {
            return Err(ChshError::InvalidSchedule("signs must be ±1".into()));
        }
        if ![self.alpha, self.alpha_prime, self.beta, self.beta_prime].iter().all(|a| a.is_finite()) {
            return Err(ChshError::InvalidSchedule("angles must be finite".into()));
        }
        Ok(())
    }

    /// The four (α, β) pairs in scoring order.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.alpha, self.beta),
            (self.alpha, self.beta_prime),
            (self.alpha_prime, self.beta),
            (self.alpha_prime, self.beta_prime),
        ]
    }

    /// Fixed A settings needed by the sweep: α, α⊥, α′, α′⊥.
    pub fn a_settings(&self) -> [f64; 4] {
        [self.alpha, self.alpha + 90.0, self.alpha_prime, self.alpha_prime + 90.0]
    }
}

/// N(α,β), N(α,β⊥), N(α⊥,β), N(α⊥,β⊥). Values are counts-equivalent and
/// may be non-integer when read off fitted fringes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorCounts {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl CorrelatorCounts {
    pub fn new(pp: f64, pm: f64, mp: f64, mm: f64) -> Self {
        Self { pp, pm, mp, mm }
    }

    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlator {
    pub e: f64,
    /// (1 − E²)/N, from propagating Poisson errors on each count.
    pub variance_exact: f64,
    /// (1 + E²)/N, treating numerator and denominator as independent.
    pub variance_conservative: f64,
    pub total: f64,
}

pub fn correlator(c: &CorrelatorCounts) -> Result<Correlator, ChshError> {
    for v in [c.pp, c.pm, c.mp, c.mm] {
        if !(v >= 0.0) {
            return Err(ChshError::NegativeCount(v));
        }
    }
    let n = c.total();
    if !(n > 0.0) {
        return Err(ChshError::ZeroTotal);
    }
    let e = (c.pp + c.mm - c.pm - c.mp) / n;
    Ok(Correlator { e, variance_exact: (1.0 - e * e) / n, variance_conservative: (1.0 + e * e) / n, total: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    pub correlators: [Correlator; 4],
    pub signs: [f64; 4],
    /// Σ signᵢ·Eᵢ before taking the magnitude.
    pub s_signed: f64,
    pub s: f64,
    pub sigma_s: f64,
    pub sigma_s_conservative: f64,
    /// (S − 2)/σ_S with the exact-propagation variance.
    pub significance: f64,
    pub significance_conservative: f64,
    /// Set when S exceeds 2√2.
    pub unphysical: bool,
    pub mean_visibility: Option<f64>,
    pub s_approx: Option<f64>,
}

impl ChshResult {
    pub fn terms(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.signs[k] * self.correlators[k].e)
    }

    pub fn with_visibility(mut self, mean_visibility: f64) -> Self {
        self.mean_visibility = Some(mean_visibility);
        self.s_approx = Some(s_from_visibility(mean_visibility));
        self
    }
}

pub fn chsh_score(correlators: [Correlator; 4], signs: [f64; 4]) -> ChshResult {
    let s_signed: f64 = correlators.iter().zip(signs).map(|(c, s)| s * c.e).sum();
    let s = s_signed.abs();
    let sigma_s = correlators.iter().map(|c| c.variance_exact).sum::<f64>().sqrt();
    let sigma_s_conservative = correlators.iter().map(|c| c.variance_conservative).sum::<f64>().sqrt();
    let sig = |sd: f64| if sd > 0.0 { (s - 2.0) / sd } else if s > 2.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    ChshResult {
        correlators,
        signs,
        s_signed,
        s,
        sigma_s,
        sigma_s_conservative,
        significance: sig(sigma_s),
        significance_conservative: sig(sigma_s_conservative),
        unphysical: s > TSIRELSON_BOUND + 1e-12,
        mean_visibility: None,
        s_approx: None,
    }
}

/// 2√2·V̄.
pub fn s_from_visibility(mean_visibility: f64) -> f64 {
    TSIRELSON_BOUND * mean_visibility
}

/// Four-term form |V₁cos(α−β) + V₂cos(α−β′) + V₃cos(α′−β) − V₄cos(α′−β′)|
/// at phase angles α = 0, α′ = π/2, β = π/4, β′ = −π/4.
pub fn s_from_visibilities(v: [f64; 4]) -> f64 {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let (a, ap, b, bp) = (0.0f64, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4);
    (v[0] * (a - b).cos() + v[1] * (a - bp).cos() + v[2] * (ap - b).cos() - v[3] * (ap - bp).cos()).abs()
}
