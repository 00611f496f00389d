use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, TAU};
use std::io::{BufRead, Write};

use super::FransonError;
use crate::spectral::{Axis, JointSpectralAmplitude};

/// Interferometer delay used for the 42 ps three-peak spacing.
pub const DEFAULT_TAU_S: f64 = 42e-12;
/// Alternative period quoted for the programmed profile.
pub const ALT_TAU_S: f64 = 45e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Envelope {
    /// `fwhm_hz` is the full width at half maximum of the power transmission |t|².
    Gaussian { fwhm_hz: f64 },
    Square { passband_hz: f64 },
    /// Unit transmission everywhere.
    Flat,
}

impl Envelope {
    fn width(&self) -> f64 {
        match *self {
            Envelope::Gaussian { fwhm_hz } => fwhm_hz,
            Envelope::Square { passband_hz } => passband_hz,
            Envelope::Flat => f64::INFINITY,
        }
    }

    /// Amplitude transmission at detuning `dnu` from the channel center.
    pub fn amplitude(&self, dnu: f64) -> f64 {
        match *self {
            Envelope::Gaussian { fwhm_hz } => {
                let x = dnu / fwhm_hz;
                (-2.0 * LN_2 * x * x).exp()
            }
            Envelope::Square { passband_hz } => {
                if dnu.abs() <= 0.5 * passband_hz {
                    1.0
                } else {
                    0.0
                }
            }
            Envelope::Flat => 1.0,
        }
    }
}

/// Spectral transfer function `t(ν) = envelope(ν)·cos(πτ(ν−νc) + B)`,
/// realized as an amplitude |cos| and a phase toggling between 0 and π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub center_hz: f64,
    /// Modulation period τ in s; infinite means no modulation.
    pub tau_s: f64,
    /// Phase offset B, rad.
    pub phase: f64,
    pub envelope: Envelope,
    /// Optional frequency pixel width; the transfer is held constant per pixel.
    pub pixel_hz: Option<f64>,
    /// Device insertion loss, dB.
    pub insertion_loss_db: f64,
}

/// Builds a cosine filter. Fails with `DegenerateFilter` when the envelope
/// is not wider than two fringe periods (2/τ).
pub fn make_cosine_filter(center_hz: f64, tau_s: f64, phase: f64, envelope: Envelope) -> Result<FilterProfile, FransonError> {
    if !(tau_s.is_finite() && tau_s > 0.0) {
        return Err(FransonError::InvalidFilter(format!("tau must be positive, got {tau_s}")));
    }
    if !(center_hz.is_finite() && center_hz > 0.0) {
        return Err(FransonError::InvalidFilter(format!("center must be positive, got {center_hz}")));
    }
    if !phase.is_finite() {
        return Err(FransonError::InvalidFilter("phase must be finite".into()));
    }
    let width = envelope.width();
    if !(width > 2.0 / tau_s) {
        return Err(FransonError::DegenerateFilter { width_hz: width, period_hz: 1.0 / tau_s });
    }
    Ok(FilterProfile { center_hz, tau_s, phase, envelope, pixel_hz: None, insertion_loss_db: 0.0 })
}

impl FilterProfile {
    /// Transfer identically 1: no envelope, no modulation, no loss.
    pub fn identity() -> Self {
        Self {
            center_hz: 0.0,
            tau_s: f64::INFINITY,
            phase: 0.0,
            envelope: Envelope::Flat,
            pixel_hz: None,
            insertion_loss_db: 0.0,
        }
    }

    /// Envelope-only passband filter without cosine modulation.
    pub fn bandpass(center_hz: f64, envelope: Envelope) -> Self {
        Self { center_hz, ..Self::identity() }.with_envelope(envelope)
    }

    fn with_envelope(self, envelope: Envelope) -> Self {
        Self { envelope, ..self }
    }

    pub fn with_phase(self, phase: f64) -> Self {
        Self { phase, ..self }
    }

    pub fn with_pixel(self, pixel_hz: Option<f64>) -> Self {
        Self { pixel_hz, ..self }
    }

    pub fn with_insertion_loss(self, db: f64) -> Self {
        Self { insertion_loss_db: db, ..self }
    }

    pub fn is_identity(&self) -> bool {
        self.tau_s.is_infinite() && self.envelope == Envelope::Flat && self.insertion_loss_db == 0.0
    }

    fn quantize(&self, nu: f64) -> f64 {
        match self.pixel_hz {
            Some(p) if p > 0.0 => self.center_hz + ((nu - self.center_hz) / p).round() * p,
            _ => nu,
        }
    }

    fn modulation(&self, nu: f64) -> f64 {
        if self.tau_s.is_infinite() {
            1.0
        } else {
            (PI * self.tau_s * (nu - self.center_hz) + self.phase).cos()
        }
    }

    /// |t(ν)|.
    pub fn amplitude(&self, nu: f64) -> f64 {
        let nu = self.quantize(nu);
        let loss = 10f64.powf(-self.insertion_loss_db / 20.0);
        loss * self.envelope.amplitude(nu - self.center_hz) * self.modulation(nu).abs()
    }

    /// Binary phase of t(ν): 0 or π.
    pub fn phase_at(&self, nu: f64) -> f64 {
        if self.modulation(self.quantize(nu)) < 0.0 {
            PI
        } else {
            0.0
        }
    }

    /// t(ν) as amplitude × e^{i·phase}, with the {0, π} phase applied as an exact sign.
    pub fn transfer(&self, nu: f64) -> Complex64 {
        if self.is_identity() {
            return Complex64::new(1.0, 0.0);
        }
        let a = self.amplitude(nu);
        let sign = if self.phase_at(nu) == 0.0 { 1.0 } else { -1.0 };
        Complex64::new(sign * a, 0.0)
    }

    /// Transfer sampled at angular frequencies (rad/s).
    pub fn weights_on(&self, omegas: &[f64]) -> Vec<Complex64> {
        omegas.iter().map(|&w| self.transfer(w / TAU)).collect()
    }
}

/// Φ'(ωs,ωi) = Φ·tA(ωs)·tB(ωi). The result is not renormalized.
pub fn apply_filters(
    jsa: &JointSpectralAmplitude,
    fa: &FilterProfile,
    fb: &FilterProfile,
) -> Result<JointSpectralAmplitude, FransonError> {
    let g = jsa.grid();
    let check = |f: &FilterProfile, lo: f64, hi: f64, arm: &str| {
        if f.envelope == Envelope::Flat {
            return Ok(());
        }
        let c = f.center_hz * TAU;
        if c < lo || c > hi {
            return Err(FransonError::GridMismatch(format!(
                "filter {arm} center {:.6e} Hz lies outside the grid",
                f.center_hz
            )));
        }
        Ok(())
    };
    let (slo, shi) = g.signal_range();
    let (ilo, ihi) = g.idler_range();
    check(fa, slo, shi, "A")?;
    check(fb, ilo, ihi, "B")?;
    let wa = fa.weights_on(&g.signal_axis());
    let wb = fb.weights_on(&g.idler_axis());
    Ok(jsa.with_axis_weights(Axis::Signal, &wa)?.with_axis_weights(Axis::Idler, &wb)?)
}

/// Writes `nu_hz,re,im` rows for the given optical frequencies.
pub fn write_filter_csv<W: Write>(filter: &FilterProfile, nus_hz: &[f64], mut w: W) -> Result<(), FransonError> {
    writeln!(w, "nu_hz,re,im")?;
    for &nu in nus_hz {
        let t = filter.transfer(nu);
        writeln!(w, "{nu:.6},{:e},{:e}", t.re, t.im)?;
    }
    Ok(())
}

/// Reads a tabulated `nu_hz,re,im` profile.
pub fn read_filter_csv<R: BufRead>(r: R) -> Result<Vec<(f64, Complex64)>, FransonError> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (k == 0 && line.starts_with("nu_hz")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(FransonError::Parse(format!("line {}: expected 3 fields", k + 1)));
        }
        let p = |s: &str| s.trim().parse::<f64>().map_err(|_| FransonError::Parse(format!("line {}: bad number {s}", k + 1)));
        out.push((p(f[0])?, Complex64::new(p(f[1])?, p(f[2])?)));
    }
    Ok(out)
}
