use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use super::SpectralError;

/// Pump field spectrum α(ω). Gaussian `fwhm` is the width of |α|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum PumpSpectrum {
    Cw { center: f64 },
    Gaussian { center: f64, fwhm: f64 },
}

impl PumpSpectrum {
    pub fn cw(center: f64) -> Result<Self, SpectralError> {
        if !(center.is_finite() && center > 0.0) {
            return Err(SpectralError::InvalidPump(format!("center must be positive, got {center}")));
        }
        Ok(PumpSpectrum::Cw { center })
    }

    pub fn gaussian(center: f64, fwhm: f64) -> Result<Self, SpectralError> {
        if !(center.is_finite() && center > 0.0) {
            return Err(SpectralError::InvalidPump(format!("center must be positive, got {center}")));
        }
        if !(fwhm.is_finite() && fwhm > 0.0) {
            return Err(SpectralError::InvalidPump(format!("fwhm must be positive, got {fwhm}")));
        }
        Ok(PumpSpectrum::Gaussian { center, fwhm })
    }

    pub fn center(&self) -> f64 {
        match *self {
            PumpSpectrum::Cw { center } | PumpSpectrum::Gaussian { center, .. } => center,
        }
    }

    /// 0 for cw.
    pub fn fwhm(&self) -> f64 {
        match *self {
            PumpSpectrum::Cw { .. } => 0.0,
            PumpSpectrum::Gaussian { fwhm, .. } => fwhm,
        }
    }

    /// Continuous amplitude with ∫|α|²dω = 1. Zero everywhere for cw,
    /// which is handled as a delta by the JSA builder.
    pub fn amplitude(&self, omega: f64) -> f64 {
        match *self {
            PumpSpectrum::Cw { .. } => 0.0,
            PumpSpectrum::Gaussian { center, fwhm } => {
                let norm = (4.0 * LN_2 / PI).powf(0.25) / fwhm.sqrt();
                let x = (omega - center) / fwhm;
                norm * (-2.0 * LN_2 * x * x).exp()
            }
        }
    }

    /// Frequency interval outside which α is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            PumpSpectrum::Cw { center } => (center, center),
            PumpSpectrum::Gaussian { center, fwhm } => (center - 3.0 * fwhm, center + 3.0 * fwhm),
        }
    }

    /// α sampled on `points` and rescaled so Σ|α|²·step = 1.
    pub fn sample_normalized(&self, points: &[f64], step: f64) -> Vec<f64> {
        match *self {
            PumpSpectrum::Cw { center } => {
                let mut out = vec![0.0; points.len()];
                if let Some((k, _)) = points
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - center).abs().total_cmp(&(b.1 - center).abs()))
                {
                    out[k] = 1.0 / step.sqrt();
                }
                out
            }
            PumpSpectrum::Gaussian { .. } => {
                let mut out: Vec<f64> = points.iter().map(|&w| self.amplitude(w)).collect();
                let norm: f64 = out.iter().map(|a| a * a).sum::<f64>() * step;
                if norm > 0.0 {
                    let s = norm.sqrt();
                    out.iter_mut().for_each(|a| *a /= s);
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_has_unit_l2_norm_after_discretization() {
        let p = PumpSpectrum::gaussian(1.2e15, 2e12).unwrap();
        let step = 1e10;
        let pts: Vec<f64> = (-1000..=1000).map(|k| 1.2e15 + k as f64 * step).collect();
        let a = p.sample_normalized(&pts, step);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>() * step;
        assert!((norm - 1.0).abs() < 1e-9);
        // the analytic prefactor is already close to unit norm
        let raw: f64 = pts.iter().map(|&w| p.amplitude(w).powi(2)).sum::<f64>() * step;
        assert!((raw - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fwhm_applies_to_power_spectrum() {
        let p = PumpSpectrum::gaussian(1.0e15, 1e12).unwrap();
        let peak = p.amplitude(1.0e15).powi(2);
        let half = p.amplitude(1.0e15 + 0.5e12).powi(2);
        assert!((half / peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cw_is_a_kronecker_delta_on_the_nearest_point() {
        let p = PumpSpectrum::cw(10.4).unwrap();
        let a = p.sample_normalized(&[9.0, 10.0, 11.0, 12.0], 1.0);
        assert_eq!(a, vec![0.0, 1.0, 0.0, 0.0]);
    }
}
