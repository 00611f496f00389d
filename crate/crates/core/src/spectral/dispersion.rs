use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::units::wavelength_nm_to_angular;

/// Quadratic Taylor model of the waveguide propagation constant,
/// k(ω) = k0 + f1·(ω−ω0) + ½·f2·(ω−ω0)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideDispersion {
    /// Waveguide length, m.
    pub length: f64,
    /// 1/m.
    pub k0: f64,
    /// s/m.
    pub f1: f64,
    /// s²/m.
    pub f2: f64,
    /// Expansion center, rad/s.
    pub omega0: f64,
}

impl Default for WaveguideDispersion {
    /// 5 cm silicon spiral expanded at 1550 nm.
    fn default() -> Self {
        let omega0 = wavelength_nm_to_angular(1550.0);
        Self {
            length: 0.05,
            k0: 2.4 * omega0 / crate::units::C_M_PER_S,
            f1: 4.2 / crate::units::C_M_PER_S,
            f2: 5e-24,
            omega0,
        }
    }
}

impl WaveguideDispersion {
    pub fn new(length: f64, k0: f64, f1: f64, f2: f64, omega0: f64) -> Result<Self, SpectralError> {
        let d = Self { length, k0, f1, f2, omega0 };
        d.validate()?;
        Ok(d)
    }

    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }

    pub fn with_f2(self, f2: f64) -> Self {
        Self { f2, ..self }
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(SpectralError::InvalidDispersion(format!(
                "length must be positive, got {}",
                self.length
            )));
        }
        if !(self.f2.is_finite() && self.f1.is_finite() && self.k0.is_finite() && self.omega0.is_finite()) {
            return Err(SpectralError::InvalidDispersion("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// k(ω) under the quadratic model, 1/m.
    pub fn k(&self, omega: f64) -> f64 {
        let x = omega - self.omega0;
        self.k0 + self.f1 * x + 0.5 * self.f2 * x * x
    }
}

/// Δk̃ = (ωp(ω1+ω2) − ωp² − ω1ω2)·f2, in 1/m.
///
/// Evaluated as −(ω1−ωp)(ω2−ωp)·f2, the same polynomial written without
/// the cancellation between terms of order ω².
pub fn effective_phase_mismatch(w1: f64, w2: f64, wp: f64, disp: &WaveguideDispersion) -> f64 {
    -((w1 - wp) * (w2 - wp)) * disp.f2
}
