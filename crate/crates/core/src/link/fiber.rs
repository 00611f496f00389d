use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::LinkError;
use crate::spectral::{Axis, JointSpectralAmplitude};
use crate::units::{angular_to_wavelength_nm, C_NM_PER_PS};

/// Dispersion of uncharacterized SMF-28, ps/(nm·km).
pub const D_SMF28: f64 = 17.0;
/// Dispersion extracted from the deployed 5 km loop, ps/(nm·km).
pub const D_EXPERIMENT: f64 = 8.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberLink {
    pub length_km: f64,
    /// dB/km.
    pub loss_db_per_km: f64,
    /// D, ps/(nm·km).
    pub dispersion: f64,
    /// λ₀, nm.
    pub lambda0_nm: f64,
    #[serde(default)]
    pub connector_losses_db: Vec<f64>,
}

impl FiberLink {
    pub fn new(
        length_km: f64,
        loss_db_per_km: f64,
        dispersion: f64,
        lambda0_nm: f64,
        connector_losses_db: Vec<f64>,
    ) -> Result<Self, LinkError> {
        let l = Self { length_km, loss_db_per_km, dispersion, lambda0_nm, connector_losses_db };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.length_km.is_finite() && self.length_km >= 0.0) {
            return Err(LinkError::InvalidLink(format!("length must be >= 0 km, got {}", self.length_km)));
        }
        if !(self.loss_db_per_km.is_finite() && self.loss_db_per_km >= 0.0) {
            return Err(LinkError::InvalidLink(format!("loss must be >= 0 dB/km, got {}", self.loss_db_per_km)));
        }
        if !self.dispersion.is_finite() {
            return Err(LinkError::InvalidLink("dispersion must be finite".into()));
        }
        if !(self.lambda0_nm.is_finite() && self.lambda0_nm > 0.0) {
            return Err(LinkError::InvalidLink("reference wavelength must be positive".into()));
        }
        if self.connector_losses_db.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(LinkError::InvalidLink("connector losses must be finite and >= 0 dB".into()));
        }
        Ok(())
    }

    /// Fiber plus connector loss, dB.
    pub fn total_loss_db(&self) -> f64 {
        self.loss_db_per_km * self.length_km + self.connector_losses_db.iter().sum::<f64>()
    }

    /// Power transmission of the whole link.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.total_loss_db() / 10.0)
    }
}

pub fn attenuate(power_dbm: f64, link: &FiberLink) -> f64 {
    power_dbm - link.total_loss_db()
}

/// Ψ(λ) = πcL·D·(λ−λ₀)²/λ₀², rad.
///
/// With the e^{+iωt} transform convention this delays wavelength λ by
/// L·D·(λ−λ₀)·λ²/λ₀² ps relative to λ₀.
pub fn dispersion_phase(lambdas_nm: &[f64], link: &FiberLink) -> Vec<f64> {
    let k = PI * C_NM_PER_PS * link.length_km * link.dispersion / (link.lambda0_nm * link.lambda0_nm);
    lambdas_nm.iter().map(|&l| k * (l - link.lambda0_nm).powi(2)).collect()
}

/// φ(λ) = −πcL·(D/λ₀²)·(λ−λ₀)², the exact negative of [`dispersion_phase`]
/// at matched parameters.
pub fn compensation_phase(lambdas_nm: &[f64], d: f64, length_km: f64, lambda0_nm: f64) -> Vec<f64> {
    let k = PI * C_NM_PER_PS * length_km * d / (lambda0_nm * lambda0_nm);
    lambdas_nm.iter().map(|&l| -(k * (l - lambda0_nm).powi(2))).collect()
}

/// Group delay −dΨ/dω of the dispersion phase, ps.
pub fn group_delay_ps(lambda_nm: f64, link: &FiberLink) -> f64 {
    let l0 = link.lambda0_nm;
    link.length_km * link.dispersion * (lambda_nm - l0) * lambda_nm * lambda_nm / (l0 * l0)
}

/// Multiplies one JSA axis by e^{iφ}.
pub fn apply_spectral_phase(
    jsa: &JointSpectralAmplitude,
    axis: Axis,
    phases: &[f64],
) -> Result<JointSpectralAmplitude, LinkError> {
    let w: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    Ok(jsa.with_axis_weights(axis, &w)?)
}

fn axis_wavelengths(jsa: &JointSpectralAmplitude, axis: Axis) -> Vec<f64> {
    let omegas = match axis {
        Axis::Signal => jsa.grid().signal_axis(),
        Axis::Idler => jsa.grid().idler_axis(),
    };
    omegas.into_iter().map(angular_to_wavelength_nm).collect()
}

/// Propagates the photon on `axis` through the link's dispersion. Loss is
/// not applied; it enters as a photon survival probability downstream.
pub fn apply_dispersion(
    jsa: &JointSpectralAmplitude,
    link: &FiberLink,
    axis: Axis,
) -> Result<JointSpectralAmplitude, LinkError> {
    let phases = dispersion_phase(&axis_wavelengths(jsa, axis), link);
    apply_spectral_phase(jsa, axis, &phases)
}

pub fn apply_compensation(
    jsa: &JointSpectralAmplitude,
    d: f64,
    length_km: f64,
    lambda0_nm: f64,
    axis: Axis,
) -> Result<JointSpectralAmplitude, LinkError> {
    let phases = compensation_phase(&axis_wavelengths(jsa, axis), d, length_km, lambda0_nm);
    apply_spectral_phase(jsa, axis, &phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn link(d: f64, l: f64) -> FiberLink {
        FiberLink::new(l, 0.2, d, 1570.0, vec![]).unwrap()
    }

    #[test]
    fn attenuation_examples() {
        assert!((attenuate(0.0, &link(0.0, 5.0)) + 1.0).abs() < 1e-12);
        assert_eq!(attenuate(3.0, &link(0.0, 0.0)), 3.0);
    }

    #[test]
    fn zero_dispersion_is_zero_phase() {
        let ls = [1560.0, 1570.0, 1580.0];
        assert!(dispersion_phase(&ls, &link(0.0, 5.0)).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn group_delay_across_one_nm() {
        let l = link(8.8, 5.0);
        let dt = group_delay_ps(1570.5, &l) - group_delay_ps(1569.5, &l);
        assert!((dt - 44.0).abs() < 0.05, "{dt}");
        // numerical −dΨ/dω agrees with the closed form
        let lam = 1571.0;
        let h = 1e-4;
        let p = dispersion_phase(&[lam - h, lam + h], &l);
        let w = |x: f64| 2.0 * PI * C_NM_PER_PS / x;
        let num = -(p[1] - p[0]) / (w(lam + h) - w(lam - h));
        assert!((num - group_delay_ps(lam, &l)).abs() < 1e-4);
    }

    #[test]
    fn matched_compensation_cancels_exactly() {
        let l = link(8.8, 4.88);
        let ls: Vec<f64> = (0..200).map(|k| 1569.0 + k as f64 * 0.01).collect();
        let a = dispersion_phase(&ls, &l);
        let b = compensation_phase(&ls, 8.8, 4.88, 1570.0);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x + y, 0.0);
        }
        assert_eq!(compensation_phase(&[1570.0], 8.8, 4.88, 1570.0)[0], 0.0);
    }

    proptest! {
        #[test]
        fn attenuation_adds_over_concatenation(
            p in -80i32..20, a in 0u32..400, b in 0u32..400, ca in 0u32..16, cb in 0u32..16,
        ) {
            // quarter-dB steps keep every sum exact in binary floating point
            let la = FiberLink::new(1.0, a as f64 * 0.25, 0.0, 1550.0, vec![ca as f64 * 0.25]).unwrap();
            let lb = FiberLink::new(1.0, b as f64 * 0.25, 0.0, 1550.0, vec![cb as f64 * 0.25]).unwrap();
            let joint = FiberLink::new(
                1.0, (a + b) as f64 * 0.25, 0.0, 1550.0, vec![ca as f64 * 0.25, cb as f64 * 0.25],
            ).unwrap();
            let p = p as f64;
            prop_assert_eq!(attenuate(attenuate(p, &la), &lb), attenuate(p, &joint));
        }
    }
}
