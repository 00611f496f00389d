//! Synthetic telemetry engineered to prescribed sample moments.
//!
//! `y = μy + σy·(r·x̂ + √(1−r²)·ẑ)` where x̂ is x standardized and ẑ is
//! Gaussian noise made exactly orthogonal to x̂ and to the constant, then
//! standardized. The sample correlation is r and the regression slope is
//! r·σy/σx up to rounding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{TelemetryError, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub r: f64,
    pub mean_y: f64,
    pub sd_y: f64,
}

fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (sd > 0.0).then(|| v.iter().map(|x| (x - m) / sd).collect())
}

/// y values with exact sample correlation `spec.r` against `x`.
pub fn moments_matched_pairs(x: &[f64], spec: FixtureSpec, seed: u64) -> Result<Vec<f64>, TelemetryError> {
    if x.len() < 3 {
        return Err(TelemetryError::InsufficientData { need: 3, got: x.len() });
    }
    let xh = standardize(x).ok_or(TelemetryError::DegenerateVariance("x"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let z = standardize(&z).ok_or(TelemetryError::DegenerateVariance("noise"))?;
    let n = x.len() as f64;
    let proj = z.iter().zip(&xh).map(|(a, b)| a * b).sum::<f64>() / n;
    let resid: Vec<f64> = z.iter().zip(&xh).map(|(a, b)| a - proj * b).collect();
    let zh = standardize(&resid).ok_or(TelemetryError::DegenerateVariance("noise"))?;
    let q = (1.0 - spec.r * spec.r).max(0.0).sqrt();
    Ok(xh.iter().zip(&zh).map(|(a, b)| spec.mean_y + spec.sd_y * (spec.r * a + q * b)).collect())
}

/// Smooth positive driver series (e.g. wind speed or temperature): a
/// first-order autoregressive walk rescaled to the given mean and spread,
/// sampled every `step_s` from `t0_s`.
fn driver(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::with_capacity(n);
    let mut s = 0.0;
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        s = 0.9 * s + e;
        v.push(s);
    }
    let h = standardize(&v).unwrap_or_else(|| vec![0.0; n]);
    h.iter().map(|x| mean + sd * x).collect()
}

/// A driver series and a response series with exact correlation,
/// both sampled on the same window-aligned grid.
#[allow(clippy::too_many_arguments)]
pub fn moments_matched_series(
    x_name: &str,
    x_unit: &str,
    y_name: &str,
    y_unit: &str,
    n: usize,
    t0_s: f64,
    step_s: f64,
    x_mean: f64,
    x_sd: f64,
    spec: FixtureSpec,
    seed: u64,
) -> Result<(TimeSeries, TimeSeries), TelemetryError> {
    let x = driver(n, x_mean, x_sd, seed);
    let y = moments_matched_pairs(&x, spec, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let t: Vec<f64> = (0..n).map(|k| t0_s + k as f64 * step_s).collect();
    Ok((TimeSeries::new(x_name, x_unit, t.clone(), x)?, TimeSeries::new(y_name, y_unit, t, y)?))
}

/// Temperature-like series oscillating about `threshold` with a response
/// whose correlation is `below.r` for x < threshold and `above.r` for
/// x ≥ threshold.
#[allow(clippy::too_many_arguments)]
pub fn split_fixture(
    n: usize,
    t0_s: f64,
    step_s: f64,
    threshold: f64,
    amplitude: f64,
    below: FixtureSpec,
    above: FixtureSpec,
    seed: u64,
) -> Result<(TimeSeries, TimeSeries), TelemetryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..n).map(|k| t0_s + k as f64 * step_s).collect();
    let day = 86_400.0;
    let x: Vec<f64> = t
        .iter()
        .map(|&tt| {
            let e: f64 = StandardNormal.sample(&mut rng);
            threshold + amplitude * (std::f64::consts::TAU * tt / day).sin() + 0.15 * amplitude * e
        })
        .collect();
    let lo: Vec<usize> = (0..n).filter(|&k| x[k] < threshold).collect();
    let hi: Vec<usize> = (0..n).filter(|&k| x[k] >= threshold).collect();
    let ylo = moments_matched_pairs(&lo.iter().map(|&k| x[k]).collect::<Vec<_>>(), below, seed.wrapping_add(1))?;
    let yhi = moments_matched_pairs(&hi.iter().map(|&k| x[k]).collect::<Vec<_>>(), above, seed.wrapping_add(2))?;
    let mut y = vec![0.0; n];
    for (k, v) in lo.iter().zip(ylo) {
        y[*k] = v;
    }
    for (k, v) in hi.iter().zip(yhi) {
        y[*k] = v;
    }
    Ok((TimeSeries::new("temperature", "F", t.clone(), x)?, TimeSeries::new("tof_drift", "ps", t, y)?))
}
