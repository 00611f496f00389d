use std::collections::BTreeMap;

use super::{TelemetryError, TimeSeries};

/// Ten-minute averaging window, s.
pub const DEFAULT_WINDOW_S: f64 = 600.0;

/// Scale turning a median absolute deviation into a normal-equivalent σ.
const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierPolicy {
    None,
    /// Drop samples further than `k` scaled MADs from the median.
    Mad { k: f64 },
}

impl Default for OutlierPolicy {
    fn default() -> Self {
        OutlierPolicy::Mad { k: 5.0 }
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Keep-mask for finite values within k scaled MADs of the median.
/// A zero MAD keeps every finite value.
pub fn mad_filter(values: &[f64], k: f64) -> Vec<bool> {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return vec![false; values.len()];
    }
    finite.sort_by(|a, b| a.total_cmp(b));
    let m = median(&finite);
    let mut dev: Vec<f64> = finite.iter().map(|v| (v - m).abs()).collect();
    dev.sort_by(|a, b| a.total_cmp(b));
    let mad = MAD_SCALE * median(&dev);
    values
        .iter()
        .map(|&v| v.is_finite() && (mad == 0.0 || (v - m).abs() <= k * mad))
        .collect()
}

/// Window index of `t` with start `idx·W`, robust to rounding so that
/// `t = idx·W` always maps to `idx`.
fn window_index(t: f64, w: f64) -> i64 {
    let mut idx = (t / w).floor() as i64;
    if ((idx + 1) as f64) * w <= t {
        idx += 1;
    }
    if (idx as f64) * w > t {
        idx -= 1;
    }
    idx
}

fn median_step(times: &[f64]) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    let mut d: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(|a, b| a.total_cmp(b));
    median(&d)
}

/// Window-mean resampling, windows anchored at multiples of `window_s` and
/// labeled by their start. The data are taken to cover
/// `[t_first, t_last + median step)`; windows not fully inside that extent
/// and windows left without samples are dropped. Returns the resampled
/// series and the number of samples rejected as outliers.
pub fn resample(series: &TimeSeries, window_s: f64, policy: OutlierPolicy) -> Result<(TimeSeries, usize), TelemetryError> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(TelemetryError::InvalidWindow(format!("window must be positive, got {window_s}")));
    }
    let times = series.times();
    let values = series.values();
    if times.is_empty() {
        return Ok((TimeSeries::new(series.name(), series.unit(), vec![], vec![])?, 0));
    }
    let keep = match policy {
        OutlierPolicy::None => values.iter().map(|v| v.is_finite()).collect(),
        OutlierPolicy::Mad { k } => mad_filter(values, k),
    };
    let removed = values.iter().zip(&keep).filter(|(v, &k)| v.is_finite() && !k).count();
    let start = times[0];
    let end = times[times.len() - 1] + median_step(times);
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for ((&t, &v), &k) in times.iter().zip(values).zip(&keep) {
        if !k {
            continue;
        }
        let e = acc.entry(window_index(t, window_s)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let mut out_t = Vec::new();
    let mut out_v = Vec::new();
    for (idx, (sum, count)) in acc {
        let ws = idx as f64 * window_s;
        let we = (idx + 1) as f64 * window_s;
        // slack absorbs rounding in the median step of window-aligned input
        if ws < start || we > end + 1e-9 * window_s {
            continue;
        }
        out_t.push(ws);
        out_v.push(if count == 1 { sum } else { sum / count as f64 });
    }
    Ok((TimeSeries::new(series.name(), series.unit(), out_t, out_v)?, removed))
}

/// Paired window means of two series on a common window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPairs {
    pub x_name: String,
    pub x_unit: String,
    pub y_name: String,
    pub y_unit: String,
    pub window_s: f64,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub outliers_removed: (usize, usize),
}

impl AlignedPairs {
    pub fn from_vectors(x: Vec<f64>, y: Vec<f64>) -> Self {
        let times = (0..x.len()).map(|k| k as f64).collect();
        Self {
            x_name: "x".into(),
            x_unit: String::new(),
            y_name: "y".into(),
            y_unit: String::new(),
            window_s: 1.0,
            times,
            x,
            y,
            outliers_removed: (0, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Resamples both series onto the same windows and keeps windows present
/// in both. `a` supplies x, `b` supplies y.
pub fn resample_and_align(
    a: &TimeSeries,
    b: &TimeSeries,
    window_s: f64,
    policy: OutlierPolicy,
) -> Result<AlignedPairs, TelemetryError> {
    let overlap = match (a.times().first(), a.times().last(), b.times().first(), b.times().last()) {
        (Some(a0), Some(a1), Some(b0), Some(b1)) => a0.max(*b0) <= a1.min(*b1),
        _ => false,
    };
    if !overlap {
        return Err(TelemetryError::NoOverlap);
    }
    let (ra, na) = resample(a, window_s, policy)?;
    let (rb, nb) = resample(b, window_s, policy)?;
    let mut times = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ra.len() && j < rb.len() {
        let (ta, tb) = (ra.times()[i], rb.times()[j]);
        if ta == tb {
            times.push(ta);
            x.push(ra.values()[i]);
            y.push(rb.values()[j]);
            i += 1;
            j += 1;
        } else if ta < tb {
            i += 1;
        } else {
            j += 1;
        }
    }
    if times.is_empty() {
        return Err(TelemetryError::NoOverlap);
    }
    Ok(AlignedPairs {
        x_name: a.name().into(),
        x_unit: a.unit().into(),
        y_name: b.name().into(),
        y_unit: b.unit().into(),
        window_s,
        times,
        x,
        y,
        outliers_removed: (na, nb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noisy(n: usize, step: f64, seed: u64) -> TimeSeries {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<f64> = (0..n).map(|k| 1000.0 + k as f64 * step).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        TimeSeries::new("v", "u", t, v).unwrap()
    }

    #[test]
    fn identical_series_pair_without_loss() {
        let s = noisy(600, 60.0, 1);
        let p = resample_and_align(&s, &s, 600.0, OutlierPolicy::default()).unwrap();
        assert_eq!(p.x, p.y);
        // samples cover [1000 s, 37000 s): whole windows start at 1200 … 36000 s
        assert_eq!(p.len(), 59);
    }

    #[test]
    fn spike_removes_exactly_its_window() {
        let base = noisy(300, 600.0, 2);
        let mut v = base.values().to_vec();
        // σ of U(−½, ½) is 0.289
        v[137] = 100.0 * 0.289;
        let spiked = TimeSeries::new("v", "u", base.times().to_vec(), v).unwrap();
        let clean = resample_and_align(&base, &base, 600.0, OutlierPolicy::default()).unwrap();
        let dirty = resample_and_align(&spiked, &base, 600.0, OutlierPolicy::default()).unwrap();
        assert_eq!(dirty.outliers_removed, (1, 0));
        assert_eq!(clean.len() - dirty.len(), 1);
        let spike_window = (base.times()[137] / 600.0).floor() * 600.0;
        assert!(clean.times.contains(&spike_window) && !dirty.times.contains(&spike_window));
    }

    #[test]
    fn no_overlap_is_an_error() {
        let a = TimeSeries::new("a", "", vec![0.0, 1.0, 2.0], vec![1.0; 3]).unwrap();
        let b = TimeSeries::new("b", "", vec![10.0, 11.0, 12.0], vec![1.0; 3]).unwrap();
        assert_eq!(resample_and_align(&a, &b, 1.0, OutlierPolicy::None), Err(TelemetryError::NoOverlap));
    }

    proptest! {
        #[test]
        fn resampling_is_idempotent(
            seed in 0u64..1000,
            n in 20usize..400,
            step in 1.0f64..120.0,
            window in 60.0f64..1800.0,
        ) {
            let s = noisy(n, step, seed);
            let (once, _) = resample(&s, window, OutlierPolicy::None).unwrap();
            prop_assume!(once.len() >= 2);
            let (twice, removed) = resample(&once, window, OutlierPolicy::None).unwrap();
            prop_assert_eq!(removed, 0);
            prop_assert_eq!(once.times(), twice.times());
            prop_assert_eq!(once.values(), twice.values());
        }
    }
}
