//! Physical constants and unit conversions shared across modules.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;

/// Speed of light in nm/ps, the natural unit pair for dispersion phases.
pub const C_NM_PER_PS: f64 = 299_792.458;

pub const PS_PER_S: f64 = 1e12;

/// Vacuum wavelength (nm) to angular frequency (rad/s).
pub fn wavelength_nm_to_angular(nm: f64) -> f64 {
    2.0 * PI * C_M_PER_S / (nm * 1e-9)
}

/// Angular frequency (rad/s) to vacuum wavelength (nm).
pub fn angular_to_wavelength_nm(omega: f64) -> f64 {
    2.0 * PI * C_M_PER_S / omega * 1e9
}

pub fn wavelength_nm_to_hz(nm: f64) -> f64 {
    C_M_PER_S / (nm * 1e-9)
}

pub fn hz_to_wavelength_nm(hz: f64) -> f64 {
    C_M_PER_S / hz * 1e9
}

/// Converts a wavelength width centered at `center_nm` into a frequency width in Hz.
pub fn bandwidth_nm_to_hz(center_nm: f64, width_nm: f64) -> f64 {
    C_M_PER_S * width_nm * 1e-9 / (center_nm * 1e-9).powi(2)
}

pub fn bandwidth_nm_to_angular(center_nm: f64, width_nm: f64) -> f64 {
    2.0 * PI * bandwidth_nm_to_hz(center_nm, width_nm)
}

pub fn fahrenheit_to_kelvin(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0 + 273.15
}

/// A temperature difference in °F expressed in kelvin.
pub fn fahrenheit_delta_to_kelvin(df: f64) -> f64 {
    df * 5.0 / 9.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Power transmission of a loss expressed in dB.
pub fn loss_db_to_transmission(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_round_trip() {
        let w = wavelength_nm_to_angular(1550.0);
        assert!((angular_to_wavelength_nm(w) - 1550.0).abs() < 1e-9);
        assert!((hz_to_wavelength_nm(wavelength_nm_to_hz(1530.0)) - 1530.0).abs() < 1e-9);
    }

    #[test]
    fn one_nanometre_near_1550_is_about_125_ghz() {
        let hz = bandwidth_nm_to_hz(1550.0, 1.0);
        assert!((hz - 124.8e9).abs() < 0.1e9, "{hz}");
    }

    #[test]
    fn temperature_conversions() {
        assert!((fahrenheit_to_kelvin(32.0) - 273.15).abs() < 1e-12);
        assert!((fahrenheit_delta_to_kelvin(-23.0) + 12.777_777_777_777_78).abs() < 1e-12);
    }
}
