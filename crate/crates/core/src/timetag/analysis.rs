use super::histogram::correlate_slices;
use super::{fit_gaussian, fit_gaussian_in_window, CoincidenceHistogram, GaussianFit, TimeTagStream, TimetagError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarResult {
    /// `f64::INFINITY` when no accidentals were seen; see `infinite`.
    pub car: f64,
    pub signal_counts: f64,
    /// Mean over the accidental windows that fit inside the histogram.
    pub accidental_counts: f64,
    pub accidental_windows: usize,
    pub infinite: bool,
}

/// Coincidence-to-accidental ratio: counts in a window of `width_ps`
/// around `center_ps` over the mean count in equal windows displaced by
/// `±accidental_offset_ps`.
pub fn car(
    h: &CoincidenceHistogram,
    center_ps: f64,
    width_ps: f64,
    accidental_offset_ps: f64,
) -> Result<CarResult, TimetagError> {
    if !(width_ps > 0.0) {
        return Err(TimetagError::InvalidParameter("signal window must be > 0".into()));
    }
    if accidental_offset_ps.abs() < width_ps {
        return Err(TimetagError::WindowsOverlap);
    }
    let edge = h.range_ps() as f64 / 2.0 + h.bin_ps() as f64 / 2.0;
    let mut acc = Vec::new();
    for sign in [-1.0, 1.0] {
        let c = center_ps + sign * accidental_offset_ps.abs();
        if c - width_ps / 2.0 >= -edge && c + width_ps / 2.0 <= edge {
            acc.push(h.counts_in_window(c, width_ps));
        }
    }
    if acc.is_empty() {
        return Err(TimetagError::InvalidParameter("accidental windows fall outside the histogram".into()));
    }
    let signal = h.counts_in_window(center_ps, width_ps);
    let accidental = acc.iter().sum::<f64>() / acc.len() as f64;
    let infinite = accidental == 0.0;
    Ok(CarResult {
        car: if infinite { f64::INFINITY } else { signal / accidental },
        signal_counts: signal,
        accidental_counts: accidental,
        accidental_windows: acc.len(),
        infinite,
    })
}

/// Side and central peaks of a Franson histogram with side peaks at ≈ ±τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriplePeak {
    pub left: GaussianFit,
    pub right: GaussianFit,
    /// `None` when the central peak is too weak to fit (destructive setting).
    pub central: Option<GaussianFit>,
    pub midpoint_ps: f64,
}

impl TriplePeak {
    pub fn separation_ps(&self) -> f64 {
        self.right.center_ps - self.left.center_ps
    }
}

/// Locates three maxima at least τ/2 apart on a smoothed copy of the
/// histogram, takes the pair separated closest to 2τ as the side peaks,
/// and fits each peak within ±τ/3 of its maximum.
pub fn segment_triple_peak(h: &CoincidenceHistogram, tau_ps: f64) -> Result<TriplePeak, TimetagError> {
    if !(tau_ps > 0.0) {
        return Err(TimetagError::InvalidParameter("τ must be > 0".into()));
    }
    let delays = h.delays_ps();
    let counts: Vec<f64> = h.counts().iter().map(|&c| c as f64).collect();
    let half = ((tau_ps / 20.0) / h.bin_ps() as f64).floor() as usize;
    let smooth: Vec<f64> = (0..counts.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(counts.len() - 1);
            counts[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));
    let mut picked: Vec<f64> = Vec::new();
    for k in order {
        if smooth[k] <= 0.0 || picked.len() == 3 {
            break;
        }
        if picked.iter().all(|p| (p - delays[k]).abs() >= tau_ps / 2.0) {
            picked.push(delays[k]);
        }
    }
    if picked.len() < 2 {
        return Err(TimetagError::InsufficientData(format!("found {} separated peaks", picked.len())));
    }
    picked.sort_by(f64::total_cmp);
    let mut best = (0, 1);
    let mut best_err = f64::INFINITY;
    for i in 0..picked.len() {
        for j in i + 1..picked.len() {
            let e = ((picked[j] - picked[i]) - 2.0 * tau_ps).abs();
            if e < best_err {
                best_err = e;
                best = (i, j);
            }
        }
    }
    let w = tau_ps / 3.0;
    let left = fit_gaussian_in_window(h, picked[best.0], w)?;
    let right = fit_gaussian_in_window(h, picked[best.1], w)?;
    let mid = 0.5 * (left.center_ps + right.center_ps);
    let central = fit_gaussian_in_window(h, mid, w).ok();
    Ok(TriplePeak { left, right, central, midpoint_ps: mid })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakMode {
    /// One Gaussian over the whole histogram.
    Single,
    /// One Gaussian within ±`half_width_ps` of the largest bin.
    SingleWindowed { half_width_ps: f64 },
    /// Midpoint of the two side-peak fits of a Franson histogram.
    Franson { tau_ps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRecord {
    pub timestamp_s: f64,
    pub center_ps: Option<f64>,
    /// Center minus that of the first epoch that fitted.
    pub delta_ps: Option<f64>,
    /// Why this epoch is a gap.
    pub error: Option<String>,
}

pub fn peak_center(h: &CoincidenceHistogram, mode: PeakMode) -> Result<f64, TimetagError> {
    match mode {
        PeakMode::Single => fit_gaussian(h).map(|f| f.center_ps),
        PeakMode::SingleWindowed { half_width_ps } => {
            let (k, _) = h.counts().iter().enumerate().max_by_key(|(_, c)| **c).expect("nonempty histogram");
            fit_gaussian_in_window(h, h.delay_of(k) as f64, half_width_ps).map(|f| f.center_ps)
        }
        PeakMode::Franson { tau_ps } => segment_triple_peak(h, tau_ps).map(|t| t.midpoint_ps),
    }
}

/// Peak-center series relative to the first fittable epoch; epochs whose
/// fit fails are kept as gaps.
pub fn track_peak_drift(epochs: &[(f64, CoincidenceHistogram)], mode: PeakMode) -> Vec<DriftRecord> {
    let mut reference = None;
    epochs
        .iter()
        .map(|(t, h)| match peak_center(h, mode) {
            Ok(c) => {
                let r = *reference.get_or_insert(c);
                DriftRecord { timestamp_s: *t, center_ps: Some(c), delta_ps: Some(c - r), error: None }
            }
            Err(e) => DriftRecord { timestamp_s: *t, center_ps: None, delta_ps: None, error: Some(e.to_string()) },
        })
        .collect()
}

/// Splits two recorded streams into consecutive epochs of `epoch_ps`
/// (by A's tag time) and histograms each. Returns `(epoch start s, histogram)`.
pub fn epoch_histograms(
    a: &TimeTagStream,
    b: &TimeTagStream,
    epoch_ps: i64,
    bin_ps: i64,
    range_ps: i64,
) -> Result<Vec<(f64, CoincidenceHistogram)>, TimetagError> {
    if epoch_ps <= 0 {
        return Err(TimetagError::InvalidParameter("epoch length must be > 0".into()));
    }
    let (ta, tb) = (a.tags(), b.tags());
    let (Some(&first), Some(&last)) = (ta.first(), ta.last()) else {
        return Ok(Vec::new());
    };
    let half = range_ps / 2 + 1;
    let mut out = Vec::new();
    let mut start = first;
    while start <= last {
        let end = start + epoch_ps;
        let lo = ta.partition_point(|&t| t < start);
        let hi = ta.partition_point(|&t| t < end);
        let blo = tb.partition_point(|&t| t < start - half);
        let bhi = tb.partition_point(|&t| t < end + half);
        let mut h = correlate_slices(&ta[lo..hi], &tb[blo..bhi], bin_ps, range_ps)?;
        h.channels = (a.channel(), b.channel());
        h.integration_s = epoch_ps as f64 * 1e-12;
        out.push((start as f64 * 1e-12, h));
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_hist(centers: &[(f64, f64)], w: f64, floor: u64) -> CoincidenceHistogram {
        let mut h = CoincidenceHistogram::new(1, 1000).unwrap();
        let counts: Vec<u64> = h
            .delays_ps()
            .iter()
            .map(|&d| floor + centers.iter().map(|(c, a)| a * (-((d - c) / w).powi(2)).exp()).sum::<f64>().round() as u64)
            .collect();
        h = CoincidenceHistogram::from_counts(1, 1000, counts).unwrap();
        h
    }

    #[test]
    fn flat_histogram_has_unit_car() {
        let h = CoincidenceHistogram::from_counts(1, 200, vec![7; 201]).unwrap();
        let r = car(&h, 0.0, 25.5, 60.0).unwrap();
        assert!((r.car - 1.0).abs() < 1e-12);
        assert_eq!(r.accidental_windows, 2);
    }

    #[test]
    fn zero_accidentals_is_flagged() {
        let h = gaussian_hist(&[(0.0, 1e3)], 10.0, 0);
        let r = car(&h, 0.0, 30.0, 300.0).unwrap();
        assert!(r.infinite && r.car.is_infinite() && r.signal_counts > 0.0);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let h = gaussian_hist(&[(0.0, 1e3)], 10.0, 1);
        assert_eq!(car(&h, 0.0, 30.0, 20.0), Err(TimetagError::WindowsOverlap));
    }

    #[test]
    fn triple_peak_midpoint_survives_dark_center() {
        let tau = 200.0;
        let h = gaussian_hist(&[(-tau + 7.0, 500.0), (7.0, 3.0), (tau + 7.0, 480.0)], 20.0, 2);
        let t = segment_triple_peak(&h, tau).unwrap();
        assert!((t.midpoint_ps - 7.0).abs() < 0.5, "{}", t.midpoint_ps);
        assert!((t.separation_ps() - 2.0 * tau).abs() < 1.0);
    }

    #[test]
    fn stationary_drift_is_zero_and_gaps_are_kept() {
        let h = gaussian_hist(&[(12.0, 900.0)], 25.0, 0);
        let empty = CoincidenceHistogram::new(1, 1000).unwrap();
        let epochs = vec![(0.0, empty.clone()), (1.0, h.clone()), (2.0, empty), (3.0, h)];
        let r = track_peak_drift(&epochs, PeakMode::Single);
        assert!(r[0].error.is_some() && r[2].error.is_some());
        assert_eq!(r[1].delta_ps, Some(0.0));
        assert!(r[3].delta_ps.unwrap().abs() < 1e-9);
    }

    #[test]
    fn epochs_partition_the_monolithic_histogram() {
        use crate::timetag::{correlate, generate_pair_streams, DetectorModel};
        let det = DetectorModel { efficiency: 0.7, dark_rate: 2e4, jitter_ps: 10.0, dead_time_ps: 0.0 };
        let (a, b) = generate_pair_streams(2e5, (1.0, 1.0), 10.0, &det, &det, 1.0, 2).unwrap();
        let epochs = epoch_histograms(&a, &b, 100_000_000_000, 2, 300).unwrap();
        assert_eq!(epochs.len(), 10);
        let mut total = CoincidenceHistogram::new(2, 300).unwrap();
        for (_, h) in &epochs {
            total.merge(h).unwrap();
        }
        assert_eq!(total.counts(), correlate(&a, &b, 2, 300).unwrap().counts());
    }
}
