use serde::Serialize;

use super::{AlignedPairs, TelemetryError, TimeSeries};
use crate::units::fahrenheit_delta_to_kelvin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    VeryWeak,
    Weak,
    Moderate,
    Strong,
}

impl Strength {
    pub fn from_r(r: f64) -> Self {
        let a = r.abs();
        if a < 0.2 {
            Strength::VeryWeak
        } else if a < 0.4 {
            Strength::Weak
        } else if a < 0.6 {
            Strength::Moderate
        } else {
            Strength::Strong
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Strength::VeryWeak => "very weak",
            Strength::Weak => "weak",
            Strength::Moderate => "moderate",
            Strength::Strong => "strong",
        }
    }
}

/// Product-moment correlation and least-squares line of one pair set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub r: f64,
    pub r_squared: f64,
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
    /// Residual sum of squares of the line.
    pub sse: f64,
    /// Total sum of squares of y.
    pub sst: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitRecord {
    pub threshold: f64,
    pub below: FitSummary,
    pub above: FitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub pair: String,
    pub x_unit: String,
    pub y_unit: String,
    pub fit: FitSummary,
    pub strength: Strength,
    pub split: Option<SplitRecord>,
}

impl CorrelationReport {
    pub fn r(&self) -> f64 {
        self.fit.r
    }

    pub fn r_squared(&self) -> f64 {
        self.fit.r_squared
    }

    /// `y = a·x + b` with units.
    pub fn equation(&self) -> String {
        equation(&self.fit, &self.x_unit, &self.y_unit)
    }
}

pub(crate) fn equation(f: &FitSummary, xu: &str, yu: &str) -> String {
    let unit = match (xu.is_empty(), yu.is_empty()) {
        (true, true) => String::new(),
        _ => format!(" [{yu} per {xu}]"),
    };
    let sign = if f.intercept < 0.0 { '-' } else { '+' };
    format!("y = {:.4}x {sign} {:.4}{unit}", f.slope, f.intercept.abs())
}

/// Two-pass Pearson r with the matching least-squares line; R² = r².
pub(crate) fn fit(x: &[f64], y: &[f64]) -> Result<FitSummary, TelemetryError> {
    let n = x.len();
    if n != y.len() {
        return Err(TelemetryError::Misaligned);
    }
    if n < 3 {
        return Err(TelemetryError::InsufficientData { need: 3, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(TelemetryError::DegenerateVariance("x"));
    }
    if syy == 0.0 {
        return Err(TelemetryError::DegenerateVariance("y"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    Ok(FitSummary { r, r_squared: r * r, slope, intercept, n, sse, sst: syy })
}

fn pair_name(p: &AlignedPairs) -> String {
    format!("{} vs {}", p.y_name, p.x_name)
}

/// Pearson correlation of y against x.
pub fn pearson(pairs: &AlignedPairs) -> Result<CorrelationReport, TelemetryError> {
    let f = fit(&pairs.x, &pairs.y)?;
    Ok(CorrelationReport {
        pair: pair_name(pairs),
        x_unit: pairs.x_unit.clone(),
        y_unit: pairs.y_unit.clone(),
        fit: f,
        strength: Strength::from_r(f.r),
        split: None,
    })
}

fn split_sides(pairs: &AlignedPairs, threshold: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut bx, mut by, mut ax, mut ay) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&x, &y) in pairs.x.iter().zip(&pairs.y) {
        if x < threshold {
            bx.push(x);
            by.push(y);
        } else {
            ax.push(x);
            ay.push(y);
        }
    }
    (bx, by, ax, ay)
}

/// Unsplit fit plus independent fits for `x < threshold` and `x ≥ threshold`.
pub fn split_threshold_fit(pairs: &AlignedPairs, threshold: f64) -> Result<CorrelationReport, TelemetryError> {
    let (bx, by, ax, ay) = split_sides(pairs, threshold);
    if bx.len() < 3 {
        return Err(TelemetryError::InsufficientSideSamples { side: "below", threshold, count: bx.len() });
    }
    if ax.len() < 3 {
        return Err(TelemetryError::InsufficientSideSamples { side: "above", threshold, count: ax.len() });
    }
    let mut report = pearson(pairs)?;
    report.split = Some(SplitRecord { threshold, below: fit(&bx, &by)?, above: fit(&ax, &ay)? });
    Ok(report)
}

/// Threshold maximizing the two-segment combined R² = 1 − (SSE₋ + SSE₊)/SST,
/// searched over midpoints between consecutive distinct x values with at
/// least three pairs per side. Returns `(threshold, combined R²)`.
pub fn best_split_threshold(pairs: &AlignedPairs) -> Result<(f64, f64), TelemetryError> {
    let total = fit(&pairs.x, &pairs.y)?;
    let mut xs: Vec<f64> = pairs.x.clone();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let mut best: Option<(f64, f64)> = None;
    for w in xs.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let (bx, by, ax, ay) = split_sides(pairs, t);
        if bx.len() < 3 || ax.len() < 3 {
            continue;
        }
        let (Ok(fb), Ok(fa)) = (fit(&bx, &by), fit(&ax, &ay)) else {
            continue;
        };
        let combined = 1.0 - (fb.sse + fa.sse) / total.sst;
        if best.is_none_or(|(_, c)| combined > c) {
            best = Some((t, combined));
        }
    }
    best.ok_or(TelemetryError::InsufficientData { need: 6, got: pairs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftSensitivity {
    /// ps/(km·K).
    pub coeff: f64,
    pub r: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Regression slope of Δτ/L (ps/km) on ΔT (K). Temperatures tagged with
/// unit `F` are converted as differences; anything else is taken as K.
pub fn drift_sensitivity(
    delta_tau_ps: &TimeSeries,
    temperature: &TimeSeries,
    length_km: f64,
) -> Result<DriftSensitivity, TelemetryError> {
    if delta_tau_ps.times() != temperature.times() {
        return Err(TelemetryError::Misaligned);
    }
    let t0 = *temperature.values().first().ok_or(TelemetryError::InsufficientData { need: 3, got: 0 })?;
    let fahrenheit = matches!(temperature.unit(), "F" | "degF" | "°F");
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&tau, &temp) in delta_tau_ps.values().iter().zip(temperature.values()) {
        if tau.is_nan() || temp.is_nan() {
            continue;
        }
        let dt = temp - t0;
        x.push(if fahrenheit { fahrenheit_delta_to_kelvin(dt) } else { dt });
        y.push(tau / length_km);
    }
    let f = fit(&x, &y)?;
    Ok(DriftSensitivity { coeff: f.slope, r: f.r, r_squared: f.r_squared, n: f.n })
}

/// Pearson r of `x[k]` against `y[k + lag]` over the overlapping samples.
pub fn cross_correlation_at_lag(x: &[f64], y: &[f64], lag: i64) -> Result<f64, TelemetryError> {
    let n = x.len().min(y.len()) as i64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
        .filter_map(|k| {
            let j = k + lag;
            (0..n).contains(&j).then(|| (x[k as usize], y[j as usize]))
        })
        .unzip();
    Ok(fit(&xs, &ys)?.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(x: Vec<f64>, y: Vec<f64>) -> AlignedPairs {
        AlignedPairs::from_vectors(x, y)
    }

    /// Brute-force oracle: textbook covariance over standard deviations.
    fn oracle_r(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0);
        cov / (vx.sqrt() * vy.sqrt())
    }

    #[test]
    fn exact_lines() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let r = pearson(&pairs(x.clone(), x.iter().map(|v| 2.0 * v + 1.0).collect())).unwrap();
        assert!((r.r() - 1.0).abs() < 1e-15 && (r.r_squared() - 1.0).abs() < 1e-15);
        assert!((r.fit.slope - 2.0).abs() < 1e-14 && (r.fit.intercept - 1.0).abs() < 1e-13);
        assert_eq!(r.strength, Strength::Strong);
        let anti = pearson(&pairs(x.clone(), x.iter().map(|v| -v).collect())).unwrap();
        assert!((anti.r() + 1.0).abs() < 1e-15);
        assert_eq!(
            pearson(&pairs(x.clone(), vec![3.0; 10])),
            Err(TelemetryError::DegenerateVariance("y"))
        );
    }

    #[test]
    fn strength_bands() {
        assert_eq!(Strength::from_r(-0.13), Strength::VeryWeak);
        assert_eq!(Strength::from_r(-0.227), Strength::Weak);
        assert_eq!(Strength::from_r(0.511), Strength::Moderate);
        assert_eq!(Strength::from_r(0.659), Strength::Strong);
    }

    #[test]
    fn v_shape_splits_into_opposite_lines() {
        let x: Vec<f64> = (0..41).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| (v - 10.0_f64).abs()).collect();
        let rep = split_threshold_fit(&pairs(x, y), 10.0).unwrap();
        assert!(rep.r().abs() < 1e-12);
        let s = rep.split.unwrap();
        assert!((s.below.r + 1.0).abs() < 1e-12);
        assert!((s.above.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thin_side_is_named() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let e = split_threshold_fit(&pairs(x.clone(), x.iter().map(|v| v * v).collect()), 1.5).unwrap_err();
        assert_eq!(e, TelemetryError::InsufficientSideSamples { side: "below", threshold: 1.5, count: 2 });
    }

    #[test]
    fn drift_sensitivity_recovers_exact_coefficient() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 600.0).collect();
        let temp: Vec<f64> = t.iter().map(|x| 280.0 + 5.0 * (x / 7200.0).sin()).collect();
        let tau: Vec<f64> = temp.iter().map(|v| -1.78 * 4.0 * (v - temp[0])).collect();
        let ts = TimeSeries::new("T", "K", t.clone(), temp).unwrap();
        let ds = TimeSeries::new("tau", "ps", t, tau).unwrap();
        let d = drift_sensitivity(&ds, &ts, 4.0).unwrap();
        assert!((d.coeff + 1.78).abs() < 1e-12);
        assert!((d.r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lagged_copy_correlates_at_its_lag() {
        let x: Vec<f64> = (0..200).map(|k| ((k * 37 % 101) as f64).sin()).collect();
        let y: Vec<f64> = (0..200).map(|k| if k >= 5 { x[k - 5] } else { 0.0 }).collect();
        assert!((cross_correlation_at_lag(&x, &y, 5).unwrap() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_covariance_oracle(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..1000)) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let Ok(rep) = pearson(&pairs(x.clone(), y.clone())) else { return Ok(()); };
            prop_assert!((rep.r() - oracle_r(&x, &y)).abs() < 1e-10);
            prop_assert!((rep.r_squared() - rep.r() * rep.r()).abs() < 1e-12);
        }

        #[test]
        fn affine_invariance(
            v in prop::collection::vec((-1e2f64..1e2, -1e2f64..1e2), 5..200),
            a in 0.01f64..100.0, b in -1e3f64..1e3, c in 0.01f64..100.0, d in -1e3f64..1e3,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let Ok(base) = pearson(&pairs(x.clone(), y.clone())) else { return Ok(()); };
            let xs: Vec<f64> = x.iter().map(|t| a * t + b).collect();
            let ys: Vec<f64> = y.iter().map(|t| c * t + d).collect();
            let scaled = pearson(&pairs(xs.clone(), ys)).unwrap();
            prop_assert!((scaled.r() - base.r()).abs() < 1e-12);
            let flipped = pearson(&pairs(xs, y.iter().map(|t| -c * t + d).collect())).unwrap();
            prop_assert!((flipped.r() + base.r()).abs() < 1e-12);
        }
    }
}
