use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{FilterKind, PeakKind, Scenario, ScenarioError, Wiring};
use crate::chsh::{write_fringe_csv, write_report, ChshError, ChshReport, ClockSetup};
use crate::franson::{apply_filters, time_domain_coincidences, visibility, FilterProfile, DEFAULT_TAU_S};
use crate::spectral::{
    marginals, schmidt_coefficients, spectral_purity, write_jsa_text, write_jsi_csv, write_marginals_csv,
    JointSpectralAmplitude, SpectralError,
};
use crate::timetag::{
    apply_clock, car, correlate, fit_gaussian_in_window, generate_events, track_peak_drift, write_histogram_csv,
    CarResult, CoincidenceHistogram, DelayModel, DriftRecord, GaussianFit, PairSource, PeakMode, TimeTagStream,
    TimetagError,
};

fn numeric(path: &str) -> impl Fn(TimetagError) -> ScenarioError + '_ {
    move |e| match e {
        TimetagError::FitDiverged(_) | TimetagError::InsufficientData(_) => {
            ScenarioError::Numeric { path: path.into(), message: e.to_string() }
        }
        _ => ScenarioError::Invalid { path: path.into(), message: e.to_string() },
    }
}

fn create(dir: &Path, name: &str) -> Result<File, ScenarioError> {
    std::fs::create_dir_all(dir)?;
    File::create(dir.join(name)).map_err(|e| ScenarioError::Io(format!("{}: {e}", dir.join(name).display())))
}

#[derive(Debug, Clone)]
pub struct SourceRun {
    pub jsa: JointSpectralAmplitude,
    pub purity: f64,
    pub schmidt: Vec<f64>,
}

pub fn run_source(scenario: &Scenario) -> Result<SourceRun, ScenarioError> {
    let jsa = scenario.build_jsa()?;
    let err = |e: SpectralError| ScenarioError::Invalid { path: "source".into(), message: e.to_string() };
    let purity = spectral_purity(&jsa).map_err(err)?;
    let schmidt = schmidt_coefficients(&jsa).map_err(err)?;
    Ok(SourceRun { jsa, purity, schmidt })
}

pub fn write_source_outputs(run: &SourceRun, dir: &Path) -> Result<(), ScenarioError> {
    let err = |e: SpectralError| ScenarioError::Io(e.to_string());
    write_jsi_csv(&run.jsa, create(dir, "jsi.csv")?).map_err(err)?;
    write_marginals_csv(&run.jsa, create(dir, "marginals.csv")?).map_err(err)?;
    write_jsa_text(&run.jsa, create(dir, "jsa.txt")?).map_err(err)?;
    let mut w = create(dir, "purity.txt")?;
    let m = marginals(&run.jsa);
    let g = run.jsa.grid();
    writeln!(w, "purity = {:.6}", run.purity)?;
    writeln!(w, "schmidt_number = {:.4}", 1.0 / run.purity)?;
    writeln!(w, "grid_points = {}", g.n_points())?;
    writeln!(w, "signal_mass = {:.6}", m.signal.iter().sum::<f64>())?;
    writeln!(w, "schmidt_coefficients_top = {}", run.schmidt.iter().take(8).map(|l| format!("{l:.6}")).collect::<Vec<_>>().join(","))?;
    Ok(())
}

/// Photon routing and delay distribution for a pair passing `fa` ⊗ `fb`.
pub(crate) fn filtered_source(
    jsa: &JointSpectralAmplitude,
    fa: &FilterProfile,
    fb: &FilterProfile,
    pair_rate_hz: f64,
    transmission: (f64, f64),
) -> Result<PairSource, ScenarioError> {
    let path = "filters";
    let fr = |e: crate::franson::FransonError| ScenarioError::Invalid { path: path.into(), message: e.to_string() };
    let both = apply_filters(jsa, fa, fb).map_err(fr)?;
    let p_a = apply_filters(jsa, fa, &FilterProfile::identity()).map_err(fr)?.norm();
    let p_b = apply_filters(jsa, &FilterProfile::identity(), fb).map_err(fr)?.norm();
    let dist = time_domain_coincidences(&both);
    let total = dist.total();
    let mass: Vec<f64> = dist.mass.iter().map(|m| m / total).collect();
    let centers = dist.delays_s.iter().map(|d| d * 1e12).collect();
    let delay = DelayModel::tabulated(centers, &mass, dist.step_s * 1e12).map_err(numeric(path))?;
    let p_both = both.norm();
    Ok(PairSource::new(pair_rate_hz, transmission, delay).with_routing(
        p_both.min(1.0),
        (p_a - p_both).max(0.0),
        (p_b - p_both).max(0.0),
    ))
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17) ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93)
}

fn tagged_streams(
    source: &PairSource,
    wiring: &Wiring,
    start_ps: i64,
    duration_s: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream), ScenarioError> {
    let (mut a, mut b) =
        generate_events(source, &wiring.det_a, &wiring.det_b, start_ps, duration_s, seed).map_err(numeric("setup"))?;
    if let ClockSetup::TwoTagger { a: ca, b: cb } = wiring.clocks {
        a = apply_clock(&a, &ca, derive_seed(seed, 1));
        b = apply_clock(&b, &cb, derive_seed(seed, 2));
    }
    Ok((a, b))
}

/// Gaussian fit to the tallest peak: a coarse pass within ±`first_half`
/// of the maximum bin, then a refit within ±3 widths of that center.
pub fn fit_peak(h: &CoincidenceHistogram, first_half: f64) -> Result<GaussianFit, TimetagError> {
    let (k, _) = h.counts().iter().enumerate().max_by_key(|(_, c)| **c).expect("nonempty histogram");
    let coarse = fit_gaussian_in_window(h, h.delay_of(k) as f64, first_half)?;
    fit_gaussian_in_window(h, coarse.center_ps, (3.0 * coarse.width_ps).max(5.0 * h.bin_ps() as f64))
}

#[derive(Debug, Clone)]
pub struct HistogramRun {
    pub hist: CoincidenceHistogram,
    pub fit: GaussianFit,
    /// Signal window = fitted FWHM around the fitted center.
    pub car: CarResult,
    /// (CAR − 1)/(CAR + 1): peak-over-floor visibility.
    pub visibility: f64,
    pub singles_hz: (f64, f64),
    /// Same seed without the compensating phase, when the link has one.
    pub uncompensated: Option<(CoincidenceHistogram, GaussianFit)>,
    pub streams: Option<(TimeTagStream, TimeTagStream)>,
}

fn histogram_pass(
    scenario: &Scenario,
    wiring: &Wiring,
    seed: u64,
    compensate: bool,
    keep_tags: bool,
) -> Result<(CoincidenceHistogram, (f64, f64), Option<(TimeTagStream, TimeTagStream)>), ScenarioError> {
    let hb = scenario.histogram_block()?;
    let rate = scenario.pair_rate_hz(hb.pair_rate_hz, "histogram.pair_rate_hz")?;
    let source = match hb.correlation_sigma_ps {
        Some(sigma) => PairSource::new(rate, wiring.transmission, DelayModel::gaussian(sigma)),
        None => {
            let jsa = scenario.propagate(&scenario.build_jsa()?, wiring, compensate)?;
            let (fa, fb) = if scenario.file.filters.is_some() {
                scenario.build_filters(jsa.grid())?
            } else {
                (FilterProfile::identity(), FilterProfile::identity())
            };
            filtered_source(&jsa, &fa, &fb, rate, wiring.transmission)?
        }
    };
    let (a, b) = tagged_streams(&source, wiring, 0, hb.integration_s, seed)?;
    let hist = correlate(&a, &b, hb.bin_ps, hb.range_ps).map_err(numeric("histogram"))?;
    let singles = (a.len() as f64 / hb.integration_s, b.len() as f64 / hb.integration_s);
    Ok((hist, singles, keep_tags.then_some((a, b))))
}

pub fn run_histogram(scenario: &Scenario, seed: Option<u64>, keep_tags: bool) -> Result<HistogramRun, ScenarioError> {
    let hb = scenario.histogram_block()?;
    let seed = scenario.seed(seed)?;
    let wiring = scenario.wiring()?;
    let (hist, singles_hz, streams) = histogram_pass(scenario, &wiring, seed, true, keep_tags)?;
    let first = (hb.range_ps as f64 / 20.0).max(50.0);
    let fit = fit_peak(&hist, first).map_err(numeric("histogram"))?;
    let car = car(&hist, fit.center_ps, fit.fwhm_ps(), hb.accidental_offset_ps).map_err(numeric("histogram"))?;
    let visibility = visibility(car.signal_counts, car.accidental_counts.min(car.signal_counts), 0.0)
        .map(|v| v.raw)
        .unwrap_or(f64::NAN);
    let uncompensated = if hb.correlation_sigma_ps.is_none() && scenario.has_compensation(&wiring) {
        let (h, _, _) = histogram_pass(scenario, &wiring, seed, false, false)?;
        let f = fit_peak(&h, first).map_err(numeric("histogram"))?;
        Some((h, f))
    } else {
        None
    };
    Ok(HistogramRun { hist, fit, car, visibility, singles_hz, uncompensated, streams })
}

pub fn write_histogram_outputs(run: &HistogramRun, dir: &Path) -> Result<(), ScenarioError> {
    let err = |e: TimetagError| ScenarioError::Io(e.to_string());
    write_histogram_csv(&run.hist, create(dir, "histogram.csv")?).map_err(err)?;
    let mut w = create(dir, "summary.txt")?;
    writeln!(w, "singles_a_hz = {:.1}", run.singles_hz.0)?;
    writeln!(w, "singles_b_hz = {:.1}", run.singles_hz.1)?;
    writeln!(w, "fit_amplitude = {:.3}", run.fit.amplitude)?;
    writeln!(w, "fit_center_ps = {:.3}", run.fit.center_ps)?;
    writeln!(w, "fit_width_ps = {:.3}", run.fit.width_ps)?;
    writeln!(w, "fwhm_ps = {:.3}", run.fit.fwhm_ps())?;
    writeln!(w, "signal_counts = {:.1}", run.car.signal_counts)?;
    writeln!(w, "accidental_counts = {:.1}", run.car.accidental_counts)?;
    if run.car.infinite {
        writeln!(w, "car = inf")?;
    } else {
        writeln!(w, "car = {:.3}", run.car.car)?;
    }
    writeln!(w, "visibility = {:.4}", run.visibility)?;
    if let Some((h, f)) = &run.uncompensated {
        write_histogram_csv(h, create(dir, "histogram_uncompensated.csv")?).map_err(err)?;
        writeln!(w, "uncompensated_fwhm_ps = {:.3}", f.fwhm_ps())?;
    }
    if let Some((a, b)) = &run.streams {
        crate::timetag::write_tag_file(a, std::io::BufWriter::new(create(dir, "tags_a.ttx")?)).map_err(err)?;
        crate::timetag::write_tag_file(b, std::io::BufWriter::new(create(dir, "tags_b.ttx")?)).map_err(err)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TofRun {
    pub records: Vec<DriftRecord>,
    /// Largest |Δτ| over fitted epochs, ps.
    pub max_abs_drift_ps: f64,
    /// Least-squares slope of Δτ against time, ps/hour.
    pub slope_ps_per_hr: f64,
}

impl TofRun {
    pub fn from_records(records: Vec<DriftRecord>) -> Self {
        let pts: Vec<(f64, f64)> =
            records.iter().filter_map(|r| r.delta_ps.map(|d| (r.timestamp_s / 3600.0, d))).collect();
        let max_abs_drift_ps = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let n = pts.len() as f64;
        let slope_ps_per_hr = if pts.len() >= 2 {
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            if sxx > 0.0 { sxy / sxx } else { 0.0 }
        } else {
            0.0
        };
        Self { records, max_abs_drift_ps, slope_ps_per_hr }
    }
}

/// Fast-forwards through `[tof]` epochs: each epoch integrates briefly at
/// its own absolute start time so clock drift and discipline act as they
/// would over the full span.
pub fn run_tof(scenario: &Scenario, seed: Option<u64>) -> Result<TofRun, ScenarioError> {
    let tb = scenario.tof_block()?;
    let seed = scenario.seed(seed)?;
    let wiring = scenario.wiring()?;
    if tb.epochs == 0 || !(tb.epoch_interval_s >= tb.epoch_integration_s && tb.epoch_integration_s > 0.0) {
        return Err(ScenarioError::Invalid {
            path: "tof".into(),
            message: "need epochs > 0 and epoch_interval_s >= epoch_integration_s > 0".into(),
        });
    }
    let source = PairSource::new(tb.pair_rate_hz, wiring.transmission, DelayModel::gaussian(tb.correlation_sigma_ps));
    let interval_ps = (tb.epoch_interval_s * 1e12).round() as i64;
    let mut epochs = Vec::with_capacity(tb.epochs);
    for e in 0..tb.epochs {
        let start = e as i64 * interval_ps;
        let (a, b) = tagged_streams(&source, &wiring, start, tb.epoch_integration_s, derive_seed(seed, 1000 + e as u64))?;
        let h = correlate(&a, &b, tb.bin_ps, tb.range_ps).map_err(numeric("tof"))?;
        epochs.push((start as f64 * 1e-12, h));
    }
    let mode = match tb.peak {
        PeakKind::Single => PeakMode::SingleWindowed { half_width_ps: tb.fit_half_width_ps },
        PeakKind::Franson => PeakMode::Franson { tau_ps: franson_tau_ps(scenario) },
    };
    Ok(TofRun::from_records(track_peak_drift(&epochs, mode)))
}

fn franson_tau_ps(scenario: &Scenario) -> f64 {
    match &scenario.file.filters {
        Some(f) if f.kind == FilterKind::Cosine => f.tau_ps,
        _ => DEFAULT_TAU_S * 1e12,
    }
}

pub fn write_tof_outputs(run: &TofRun, dir: &Path) -> Result<(), ScenarioError> {
    let mut w = std::io::BufWriter::new(create(dir, "drift.csv")?);
    writeln!(w, "timestamp_s,center_ps,delta_ps,status")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for r in &run.records {
        let status = r.error.as_deref().map(|e| format!("gap: {}", e.replace(',', ";"))).unwrap_or_else(|| "ok".into());
        writeln!(w, "{},{},{},{}", r.timestamp_s, opt(r.center_ps), opt(r.delta_ps), status)?;
    }
    w.flush()?;
    let mut s = create(dir, "summary.txt")?;
    writeln!(s, "epochs = {}", run.records.len())?;
    writeln!(s, "gaps = {}", run.records.iter().filter(|r| r.error.is_some()).count())?;
    writeln!(s, "max_abs_drift_ps = {:.3}", run.max_abs_drift_ps)?;
    writeln!(s, "slope_ps_per_hr = {:.4}", run.slope_ps_per_hr)?;
    Ok(())
}

pub fn write_chsh_outputs(report: &ChshReport, dir: &Path) -> Result<(), ScenarioError> {
    let err = |e: ChshError| ScenarioError::Io(e.to_string());
    write_report(report, create(dir, "report.txt")?).map_err(err)?;
    for (k, s) in report.sweeps.iter().enumerate() {
        write_fringe_csv(s, create(dir, &format!("fringe_{k}_alpha_{}.csv", s.alpha_deg))?).map_err(err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOF: &str = r#"
seed = 5
[detector.d]
efficiency = 0.9
jitter_ps = 8.0
[clock.a]
jitter_ps = 3.0
[clock.b]
drift_ps_per_s = 0.002777777777777778
jitter_ps = 3.0
[setup]
detector_a = "d"
detector_b = "d"
clock_a = "a"
clock_b = "b"
[tof]
epochs = 13
epoch_interval_s = 3600.0
epoch_integration_s = 0.2
pair_rate_hz = 50000.0
correlation_sigma_ps = 10.0
range_ps = 1200
"#;

    #[test]
    fn tof_run_recovers_injected_drift() {
        let run = run_tof(&Scenario::parse(TOF).unwrap(), None).unwrap();
        assert_eq!(run.records.len(), 13);
        assert!((run.slope_ps_per_hr / 10.0 - 1.0).abs() < 0.05, "{}", run.slope_ps_per_hr);
    }

    #[test]
    fn stationary_tof_is_flat() {
        let text = TOF.replace("drift_ps_per_s = 0.002777777777777778\n", "");
        let run = run_tof(&Scenario::parse(&text).unwrap(), None).unwrap();
        assert!(run.max_abs_drift_ps < 1.0, "{}", run.max_abs_drift_ps);
    }
}
