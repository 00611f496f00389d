use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{effective_phase_mismatch, FrequencyGrid, PumpSpectrum, SpectralError, WaveguideDispersion};

/// Tolerance on Σ|Φ|²ΔωsΔωi used for the normalized flag.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Signal,
    Idler,
}

/// Complex per-axis multipliers carried alongside a base amplitude.
///
/// Filters and fiber phases act on one photon's frequency only, so they
/// are kept as separable weight vectors; element values are formed as
/// `base[i][j] * (signal[i] * idler[j])`. Weights on different axes
/// therefore commute exactly, whatever order they were applied in.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisWeights {
    pub signal: Vec<Complex64>,
    pub idler: Vec<Complex64>,
}

impl AxisWeights {
    pub fn ones(n: usize) -> Self {
        Self { signal: vec![Complex64::new(1.0, 0.0); n], idler: vec![Complex64::new(1.0, 0.0); n] }
    }

    pub fn axis(&self, axis: Axis) -> &[Complex64] {
        match axis {
            Axis::Signal => &self.signal,
            Axis::Idler => &self.idler,
        }
    }
}

/// Discretized biphoton amplitude Φ(ωs, ωi), row-major with signal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: FrequencyGrid,
    base: Vec<Complex64>,
    weights: AxisWeights,
    normalized: bool,
}

impl JointSpectralAmplitude {
    /// Wraps a row-major n×n matrix. The normalized flag reflects the
    /// actual quadrature norm.
    pub fn from_values(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self, SpectralError> {
        let n = grid.n_points();
        if values.len() != n * n {
            return Err(SpectralError::GridMismatch(format!(
                "expected {} values for a {n}x{n} grid, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        let mut jsa = Self { grid, base: values, weights: AxisWeights::ones(n), normalized: false };
        jsa.normalized = (jsa.norm() - 1.0).abs() <= NORM_TOLERANCE;
        Ok(jsa)
    }

    /// Φ = A(ωs)·B(ωi), normalized.
    pub fn separable(grid: FrequencyGrid, a: &[Complex64], b: &[Complex64]) -> Result<Self, SpectralError> {
        let n = grid.n_points();
        if a.len() != n || b.len() != n {
            return Err(SpectralError::GridMismatch("factor length differs from grid size".into()));
        }
        let values = (0..n * n).map(|k| a[k / n] * b[k % n]).collect();
        Self::from_values(grid, values)?.normalized_copy()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n_points()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weights(&self) -> &AxisWeights {
        &self.weights
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n();
        self.base[i * n + j] * (self.weights.signal[i] * self.weights.idler[j])
    }

    /// Row-major materialized values.
    pub fn values(&self) -> Vec<Complex64> {
        let n = self.n();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.value(i, j);
            }
        });
        out
    }

    /// Joint spectral intensity |Φ|², row-major.
    pub fn intensity(&self) -> Vec<f64> {
        self.values().iter().map(|v| v.norm_sqr()).collect()
    }

    /// Σ|Φ|²·ΔωsΔωi.
    pub fn norm(&self) -> f64 {
        let n = self.n();
        let dw = self.grid.spacing();
        let s: f64 = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.value(i, j).norm_sqr()).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum();
        s * dw * dw
    }

    /// Copy rescaled to unit norm, with weights folded into the values.
    pub fn normalized_copy(&self) -> Result<Self, SpectralError> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(SpectralError::NotNormalized { norm });
        }
        let s = 1.0 / norm.sqrt();
        let values = self.values().into_iter().map(|v| v * s).collect();
        Self::from_values(self.grid, values)
    }

    /// Multiplies one axis by `w` elementwise. The result is not renormalized.
    pub fn with_axis_weights(&self, axis: Axis, w: &[Complex64]) -> Result<Self, SpectralError> {
        if w.len() != self.n() {
            return Err(SpectralError::GridMismatch(format!(
                "weight vector has {} entries for a {}-point axis",
                w.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        let target = match axis {
            Axis::Signal => &mut out.weights.signal,
            Axis::Idler => &mut out.weights.idler,
        };
        for (t, x) in target.iter_mut().zip(w) {
            *t *= *x;
        }
        out.normalized = (out.norm() - 1.0).abs() <= NORM_TOLERANCE;
        Ok(out)
    }

    /// Multiplies every value by a constant (e.g. a global phase).
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.base.iter_mut().for_each(|v| *v *= c);
        out.normalized = (out.norm() - 1.0).abs() <= NORM_TOLERANCE;
        out
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Φ(ω1,ω2) ∝ ∫dωp α(ωp)α(ω1+ω2−ωp)·sinc(LΔk̃/2), normalized to unit norm.
///
/// A cw pump collapses the integral onto the grid anti-diagonal nearest
/// ω1+ω2 = 2ωp0. Gaussian pumps are integrated by midpoint quadrature over
/// ±3 fwhm with step min(Δω, fwhm/8).
pub fn compute_jsa(
    pump: &PumpSpectrum,
    grid: &FrequencyGrid,
    disp: &WaveguideDispersion,
) -> Result<JointSpectralAmplitude, SpectralError> {
    disp.validate()?;
    let (lo, hi) = pump.support();
    let (plo, phi) = grid.pump_range();
    if lo < plo || hi > phi {
        return Err(SpectralError::GridMismatch(format!(
            "pump support [{lo:.6e}, {hi:.6e}] rad/s exceeds integration range [{plo:.6e}, {phi:.6e}] rad/s"
        )));
    }
    let n = grid.n_points();
    let dw = grid.spacing();
    let ws = grid.signal_axis();
    let wi = grid.idler_axis();
    let half_l = 0.5 * disp.length;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];

    match *pump {
        PumpSpectrum::Cw { center } => {
            let base = ws[0] + wi[0];
            let k0 = ((2.0 * center - base) / dw).round() as i64;
            if k0 < 0 || k0 > 2 * (n as i64 - 1) {
                return Err(SpectralError::GridMismatch("cw anti-diagonal falls outside the grid".into()));
            }
            for i in 0..n {
                let j = k0 - i as i64;
                if (0..n as i64).contains(&j) {
                    let j = j as usize;
                    let dk = effective_phase_mismatch(ws[i], wi[j], center, disp);
                    values[i * n + j] = Complex64::new(sinc(half_l * dk), 0.0);
                }
            }
        }
        PumpSpectrum::Gaussian { center, fwhm } => {
            let h = dw.min(fwhm / 8.0);
            let m = ((hi - lo) / h).ceil() as usize;
            let h = (hi - lo) / m as f64;
            let wp: Vec<f64> = (0..m).map(|k| lo + (k as f64 + 0.5) * h).collect();
            let ap: Vec<f64> = wp.iter().map(|&w| pump.amplitude(w)).collect();
            let reach = 3.0 * fwhm;
            values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    let sum_w = ws[i] + wi[j];
                    // α(S−ωp) vanishes unless S/2 lies within reach of the center.
                    if (0.5 * sum_w - center).abs() > reach {
                        continue;
                    }
                    let mut acc = 0.0;
                    for (k, &p) in wp.iter().enumerate() {
                        let partner = sum_w - p;
                        if (partner - center).abs() > reach {
                            continue;
                        }
                        let dk = effective_phase_mismatch(ws[i], wi[j], p, disp);
                        acc += ap[k] * pump.amplitude(partner) * sinc(half_l * dk);
                    }
                    *v = Complex64::new(acc * h, 0.0);
                }
            });
        }
    }

    let raw = JointSpectralAmplitude::from_values(*grid, values)?;
    raw.normalized_copy()
}

/// Per-bin marginal masses: `signal[i] = Σ_j |Φij|²ΔωsΔωi`, likewise for
/// the idler columns. Each sums to the JSA norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub signal: Vec<f64>,
    pub idler: Vec<f64>,
}

impl Marginals {
    /// Mass per bin divided by Δω, i.e. a spectral density in 1/(rad/s).
    pub fn signal_density(&self, spacing: f64) -> Vec<f64> {
        self.signal.iter().map(|m| m / spacing).collect()
    }

    pub fn idler_density(&self, spacing: f64) -> Vec<f64> {
        self.idler.iter().map(|m| m / spacing).collect()
    }
}

pub fn marginals(jsa: &JointSpectralAmplitude) -> Marginals {
    let n = jsa.n();
    let dw = jsa.grid().spacing();
    let cell = dw * dw;
    let mut signal = vec![0.0; n];
    let mut idler = vec![0.0; n];
    for (i, s) in signal.iter_mut().enumerate() {
        for (j, d) in idler.iter_mut().enumerate() {
            let m = jsa.value(i, j).norm_sqr() * cell;
            *s += m;
            *d += m;
        }
    }
    Marginals { signal, idler }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{bandwidth_nm_to_angular, wavelength_nm_to_angular};

    fn small_grid(n: usize) -> FrequencyGrid {
        let wp = wavelength_nm_to_angular(1550.0);
        FrequencyGrid::centered_on(wp, bandwidth_nm_to_angular(1550.0, 60.0), n).unwrap()
    }

    fn off_diagonal_fraction(jsa: &JointSpectralAmplitude, pump: f64) -> f64 {
        let g = jsa.grid();
        let n = g.n_points();
        let dw = g.spacing();
        let mut off = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let m = jsa.value(i, j).norm_sqr();
                total += m;
                if (g.signal(i) + g.idler(j) - 2.0 * pump).abs() > dw {
                    off += m;
                }
            }
        }
        off / total
    }

    #[test]
    fn cw_pump_sits_on_the_anti_diagonal() {
        let g = small_grid(128);
        let wp = wavelength_nm_to_angular(1550.0);
        let jsa = compute_jsa(&PumpSpectrum::cw(wp).unwrap(), &g, &WaveguideDispersion::default()).unwrap();
        assert!(jsa.is_normalized());
        assert!(off_diagonal_fraction(&jsa, wp) < 1e-6);
    }

    #[test]
    fn gaussian_converges_to_cw_as_fwhm_shrinks() {
        let g = small_grid(64);
        let wp = wavelength_nm_to_angular(1550.0);
        let d = WaveguideDispersion::default().with_length(0.15);
        let cw = compute_jsa(&PumpSpectrum::cw(wp).unwrap(), &g, &d).unwrap().values();
        let mut last = f64::INFINITY;
        for mult in [4.0, 2.0, 1.0] {
            let p = PumpSpectrum::gaussian(wp, mult * g.spacing()).unwrap();
            let v = compute_jsa(&p, &g, &d).unwrap().values();
            // compare intensities projected as unit vectors: the cw delta
            // carries a different absolute scale per cell
            let dist = l2_shape_distance(&cw, &v);
            assert!(dist < last, "fwhm {mult}x spacing: {dist} !< {last}");
            last = dist;
        }
    }

    fn l2_shape_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        let na: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        a.iter().zip(b).map(|(x, y)| (x / na - y / nb).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn pump_outside_grid_is_rejected() {
        let g = small_grid(64);
        let p = PumpSpectrum::gaussian(wavelength_nm_to_angular(1550.0), g.span()).unwrap();
        assert!(matches!(
            compute_jsa(&p, &g, &WaveguideDispersion::default()),
            Err(SpectralError::GridMismatch(_))
        ));
    }

    #[test]
    fn marginals_sum_to_one_and_mirror_for_cw() {
        let g = small_grid(128);
        let wp = wavelength_nm_to_angular(1550.0);
        let jsa = compute_jsa(&PumpSpectrum::cw(wp).unwrap(), &g, &WaveguideDispersion::default()).unwrap();
        let m = marginals(&jsa);
        assert!((m.signal.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((m.idler.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let n = g.n_points();
        for i in 0..n {
            // direct |Φ|² summation along the anti-diagonal partner
            let direct: f64 = (0..n).map(|j| jsa.value(i, j).norm_sqr()).sum::<f64>() * g.spacing().powi(2);
            assert!((m.signal[i] - direct).abs() < 1e-15);
            assert!((m.signal[i] - m.idler[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_jsa_has_equal_marginals() {
        let g = small_grid(64);
        let wp = wavelength_nm_to_angular(1550.0);
        let p = PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(1550.0, 3.0)).unwrap();
        let jsa = compute_jsa(&p, &g, &WaveguideDispersion::default()).unwrap();
        let m = marginals(&jsa);
        for (a, b) in m.signal.iter().zip(&m.idler) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_weights_commute_exactly() {
        let g = small_grid(32);
        let wp = wavelength_nm_to_angular(1550.0);
        let jsa = compute_jsa(&PumpSpectrum::cw(wp).unwrap(), &g, &WaveguideDispersion::default()).unwrap();
        let a: Vec<Complex64> = (0..32).map(|k| Complex64::from_polar(0.3 + 0.02 * k as f64, 0.1 * k as f64)).collect();
        let b: Vec<Complex64> = (0..32).map(|k| Complex64::from_polar(0.9 - 0.01 * k as f64, -0.2 * k as f64)).collect();
        let ab = jsa.with_axis_weights(Axis::Signal, &a).unwrap().with_axis_weights(Axis::Idler, &b).unwrap();
        let ba = jsa.with_axis_weights(Axis::Idler, &b).unwrap().with_axis_weights(Axis::Signal, &a).unwrap();
        assert_eq!(ab.values(), ba.values());
    }
}
