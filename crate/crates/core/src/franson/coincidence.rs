use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::FransonError;
use crate::spectral::JointSpectralAmplitude;

/// Local maximum of a delay distribution with the mass of its basin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRecord {
    pub position_s: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePeakWeights {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

/// Relative-delay coincidence distribution on a uniform axis.
///
/// `mass[k]` is the coincidence probability in the bin centered at
/// `delays[k]`; the total equals the norm of the amplitude it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceDistribution {
    pub step_s: f64,
    pub delays_s: Vec<f64>,
    pub mass: Vec<f64>,
}

/// Peaks below this fraction of the tallest bin are not reported.
const PEAK_FLOOR: f64 = 1e-3;

/// |∫∫Φ'(ωs,ωi)e^{iωs·ts}e^{iωi·ti}dωs dωi|² projected onto t = ti − ts.
///
/// The 2D inverse transform runs on the JSA grid; the delay step is
/// 2π/(nΔω) and the axis spans ±n/2 steps.
pub fn time_domain_coincidences(jsa: &JointSpectralAmplitude) -> CoincidenceDistribution {
    let n = jsa.n();
    let dw = jsa.grid().spacing();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut buf = jsa.values();

    let transform_rows = |buf: &mut [Complex64]| {
        buf.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );
    };
    // idler axis
    transform_rows(&mut buf);
    // signal axis, by transposing so rows become idler time bins
    let mut t = vec![Complex64::new(0.0, 0.0); n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(ki, row)| {
        for (ks, v) in row.iter_mut().enumerate() {
            *v = buf[ks * n + ki];
        }
    });
    transform_rows(&mut t);
    // t[ki][ks] now holds A(ts, ti)

    let scale = dw * dw / (n as f64 * n as f64);
    let by_offset: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|d| {
            (0..n)
                .map(|ks| {
                    let ki = (ks + d) % n;
                    t[ki * n + ks].norm_sqr()
                })
                .sum::<f64>()
                * scale
        })
        .collect();

    let step = jsa.grid().delay_step();
    let half = n / 2;
    let mut delays_s = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    for k in 0..n {
        // ascending signed offsets −n/2 .. n/2−1
        let signed = k as i64 - half as i64;
        let d = signed.rem_euclid(n as i64) as usize;
        delays_s.push(signed as f64 * step);
        mass.push(by_offset[d]);
    }
    CoincidenceDistribution { step_s: step, delays_s, mass }
}

impl CoincidenceDistribution {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Probability density in 1/s.
    pub fn density(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m / self.step_s).collect()
    }

    /// Mass inside `[center − width/2, center + width/2]`, counting partial
    /// bin overlaps proportionally.
    pub fn mass_within(&self, center_s: f64, width_s: f64) -> f64 {
        let lo = center_s - 0.5 * width_s;
        let hi = center_s + 0.5 * width_s;
        let h = 0.5 * self.step_s;
        self.delays_s
            .iter()
            .zip(&self.mass)
            .map(|(&t, &m)| {
                let overlap = (hi.min(t + h) - lo.max(t - h)).max(0.0);
                m * overlap / self.step_s
            })
            .sum()
    }

    /// Masses within ±τ/2 of −τ, 0 and +τ.
    pub fn three_peak_weights(&self, tau_s: f64) -> ThreePeakWeights {
        ThreePeakWeights {
            left: self.mass_within(-tau_s, tau_s),
            center: self.mass_within(0.0, tau_s),
            right: self.mass_within(tau_s, tau_s),
        }
    }

    /// Local maxima above a small floor, each weighted by the mass between
    /// the midpoints to its neighbouring peaks.
    pub fn peaks(&self) -> Vec<PeakRecord> {
        let n = self.mass.len();
        let max = self.mass.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return Vec::new();
        }
        let mut idx = Vec::new();
        for k in 0..n {
            let m = self.mass[k];
            let left = if k > 0 { self.mass[k - 1] } else { f64::NEG_INFINITY };
            let right = if k + 1 < n { self.mass[k + 1] } else { f64::NEG_INFINITY };
            if m >= PEAK_FLOOR * max && m > left && m >= right {
                idx.push(k);
            }
        }
        let mut out = Vec::with_capacity(idx.len());
        for (p, &k) in idx.iter().enumerate() {
            let start = if p == 0 { 0 } else { (idx[p - 1] + k) / 2 + 1 };
            let end = if p + 1 == idx.len() { n } else { (k + idx[p + 1]) / 2 + 1 };
            out.push(PeakRecord { position_s: self.delays_s[k], weight: self.mass[start..end].iter().sum() });
        }
        out
    }

    /// Smallest nonzero |position| among peaks carrying at least 1% of the
    /// total mass.
    pub fn side_peak_separation(&self) -> Option<f64> {
        let total = self.total();
        self.peaks()
            .into_iter()
            .filter(|p| p.weight >= 0.01 * total && p.position_s.abs() > 2.5 * self.step_s)
            .map(|p| p.position_s.abs())
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Circular convolution with a Gaussian of standard deviation `sigma_s`
    /// (timing jitter of the detection chain). Mass is preserved.
    pub fn with_gaussian_jitter(&self, sigma_s: f64) -> Self {
        if !(sigma_s > 0.0) {
            return self.clone();
        }
        let n = self.mass.len();
        let reach = ((6.0 * sigma_s / self.step_s).ceil() as usize).min(n / 2);
        let kernel: Vec<f64> = (-(reach as i64)..=reach as i64)
            .map(|k| {
                let x = k as f64 * self.step_s / sigma_s;
                (-0.5 * x * x).exp()
            })
            .collect();
        let ksum: f64 = kernel.iter().sum();
        let mass: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                kernel
                    .iter()
                    .enumerate()
                    .map(|(q, w)| {
                        let src = (k as i64 + q as i64 - reach as i64).rem_euclid(n as i64) as usize;
                        self.mass[src] * w
                    })
                    .sum::<f64>()
                    / ksum
            })
            .collect();
        Self { step_s: self.step_s, delays_s: self.delays_s.clone(), mass }
    }

    /// Full width at half maximum of the tallest peak, by linear
    /// interpolation of the half-maximum crossings.
    pub fn fwhm(&self) -> Option<f64> {
        let (kmax, &max) = self.mass.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        if max <= 0.0 {
            return None;
        }
        let half = 0.5 * max;
        let n = self.mass.len();
        let mut l = kmax;
        while l > 0 && self.mass[l - 1] > half {
            l -= 1;
        }
        let mut r = kmax;
        while r + 1 < n && self.mass[r + 1] > half {
            r += 1;
        }
        if l == 0 || r + 1 == n {
            return None;
        }
        let frac = |inside: f64, outside: f64| (inside - half) / (inside - outside);
        let left = self.delays_s[l] - frac(self.mass[l], self.mass[l - 1]) * self.step_s;
        let right = self.delays_s[r] + frac(self.mass[r], self.mass[r + 1]) * self.step_s;
        Some(right - left)
    }

    /// Mass-weighted mean delay inside a window.
    pub fn centroid_within(&self, center_s: f64, width_s: f64) -> f64 {
        let (mut m, mut mt) = (0.0, 0.0);
        for (&t, &w) in self.delays_s.iter().zip(&self.mass) {
            if (t - center_s).abs() <= 0.5 * width_s {
                m += w;
                mt += w * t;
            }
        }
        if m > 0.0 {
            mt / m
        } else {
            center_s
        }
    }
}

/// Mass within `window` centered on zero delay (the short-short plus
/// long-long peak).
pub fn postselect_central_peak(dist: &CoincidenceDistribution, window_s: f64) -> Result<f64, FransonError> {
    if let Some(sep) = dist.side_peak_separation() {
        if window_s >= 2.0 * sep {
            return Err(FransonError::WindowOverlapsSidePeaks { window_s, separation_s: sep });
        }
    }
    postselect_window(dist, 0.0, window_s)
}

/// Mass within `window` centered at `center_s`.
pub fn postselect_window(dist: &CoincidenceDistribution, center_s: f64, window_s: f64) -> Result<f64, FransonError> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(FransonError::InvalidWindow(format!("window must be positive, got {window_s}")));
    }
    Ok(dist.mass_within(center_s, window_s))
}
