use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{JointSpectralAmplitude, SpectralError};

/// Singular values below this fraction of the largest are dropped.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-12;

const NORM_GATE: f64 = 1e-6;

/// Schmidt weights λk: squared singular values of Φ·Δω, renormalized to
/// Σλk = 1 and sorted descending.
pub fn schmidt_coefficients(jsa: &JointSpectralAmplitude) -> Result<Vec<f64>, SpectralError> {
    let norm = jsa.norm();
    if (norm - 1.0).abs() > NORM_GATE {
        return Err(SpectralError::NotNormalized { norm });
    }
    let n = jsa.n();
    let dw = jsa.grid().spacing();
    let values = jsa.values();
    let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| values[i * n + j] * dw);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let mut lambda: Vec<f64> = sv
        .iter()
        .filter(|&&s| s >= SINGULAR_VALUE_CUTOFF * max)
        .map(|s| s * s)
        .collect();
    let total: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= total);
    lambda.sort_by(|a, b| b.total_cmp(a));
    Ok(lambda)
}

/// γ = Tr[ρ_I²] = Σλk².
pub fn spectral_purity(jsa: &JointSpectralAmplitude) -> Result<f64, SpectralError> {
    Ok(schmidt_coefficients(jsa)?.iter().map(|l| l * l).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{compute_jsa, FrequencyGrid, PumpSpectrum, WaveguideDispersion};
    use crate::units::{bandwidth_nm_to_angular, wavelength_nm_to_angular};

    fn grid(n: usize) -> FrequencyGrid {
        let wp = wavelength_nm_to_angular(1550.0);
        FrequencyGrid::centered_on(wp, bandwidth_nm_to_angular(1550.0, 60.0), n).unwrap()
    }

    /// Tr[ρ_I²] from an explicit reduced density matrix
    /// ρ_I(j,j') = Σ_i Φij Φ*ij' Δω² and its Hermitian eigenvalues.
    fn rho_oracle(jsa: &JointSpectralAmplitude) -> f64 {
        let n = jsa.n();
        let dw = jsa.grid().spacing();
        let mut rho = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += jsa.value(i, j) * jsa.value(i, k).conj();
                }
                rho[(j, k)] = acc * dw * dw;
            }
        }
        let trace: f64 = (0..n).map(|j| rho[(j, j)].re).sum();
        let eig = rho.symmetric_eigen();
        eig.eigenvalues.iter().map(|e| (e / trace).powi(2)).sum()
    }

    #[test]
    fn separable_state_is_pure() {
        let g = grid(64);
        let a: Vec<Complex64> = (0..64).map(|k| Complex64::new((-((k as f64 - 30.0) / 6.0).powi(2)).exp(), 0.1)).collect();
        let b: Vec<Complex64> = (0..64).map(|k| Complex64::from_polar(1.0 / (1.0 + k as f64), 0.3 * k as f64)).collect();
        let jsa = JointSpectralAmplitude::separable(g, &a, &b).unwrap();
        assert!((spectral_purity(&jsa).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn svd_matches_reduced_density_oracle() {
        let wp = wavelength_nm_to_angular(1550.0);
        for (n, pump) in [
            (128, PumpSpectrum::cw(wp).unwrap()),
            (128, PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(1550.0, 3.0)).unwrap()),
            (64, PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(1550.0, 8.0)).unwrap()),
        ] {
            let jsa = compute_jsa(&pump, &grid(n), &WaveguideDispersion::default().with_length(0.1)).unwrap();
            let svd = spectral_purity(&jsa).unwrap();
            let oracle = rho_oracle(&jsa);
            assert!((svd - oracle).abs() < 1e-8, "{svd} vs {oracle}");
        }
    }

    #[test]
    fn bounds_and_global_phase_invariance() {
        let wp = wavelength_nm_to_angular(1550.0);
        let p = PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(1550.0, 3.0)).unwrap();
        let jsa = compute_jsa(&p, &grid(64), &WaveguideDispersion::default()).unwrap();
        let g = spectral_purity(&jsa).unwrap();
        assert!(g >= 1.0 / 64.0 && g <= 1.0);
        let rotated = jsa.scaled(Complex64::from_polar(1.0, 1.234));
        assert!((spectral_purity(&rotated).unwrap() - g).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let wp = wavelength_nm_to_angular(1550.0);
        let jsa = compute_jsa(&PumpSpectrum::cw(wp).unwrap(), &grid(32), &WaveguideDispersion::default()).unwrap();
        let doubled = jsa.scaled(Complex64::new(2.0, 0.0));
        assert!(matches!(spectral_purity(&doubled), Err(SpectralError::NotNormalized { .. })));
    }
}
