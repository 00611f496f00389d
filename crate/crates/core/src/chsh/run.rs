use std::io::Write;

use rayon::prelude::*;

use super::{chsh_score, correlator, fit_fringe, AngleSchedule, ChshError, ChshResult, CorrelatorCounts, FringeFit, FringeFitOptions};
use crate::franson::{apply_filters, time_domain_coincidences, CoincidenceDistribution, FilterProfile};
use crate::spectral::JointSpectralAmplitude;
use crate::timetag::{
    apply_clock, car, correlate, generate_events, segment_triple_peak, ClockModel, CoincidenceHistogram, DelayModel,
    DetectorModel, HistogramAccumulator, PairSource,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Mean counts computed from the filtered spectrum, no sampling noise.
    Expected,
    /// Tag streams generated per phase point and histogrammed.
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockSetup {
    /// Both detectors on one tagger; the shared clock cancels.
    SingleTagger,
    /// Each detector on its own, separately disciplined tagger.
    TwoTagger { a: ClockModel, b: ClockModel },
}

/// Bob's sweep, in degrees of analyzer angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSchedule {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        Self { start_deg: 0.0, stop_deg: 275.0, step_deg: 7.0 }
    }
}

impl SweepSchedule {
    pub fn angles(&self) -> Vec<f64> {
        let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start_deg + k as f64 * self.step_deg).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ChshSetup {
    /// Biphoton spectrum at the analyzers (after link and compensation).
    pub jsa: JointSpectralAmplitude,
    /// Analyzer A on the signal axis; its phase is set per setting.
    pub filter_a: FilterProfile,
    /// Analyzer B on the idler axis.
    pub filter_b: FilterProfile,
    pub schedule: AngleSchedule,
    pub sweep: SweepSchedule,
    /// Post-selection window on the central peak, ps.
    pub window_ps: f64,
    /// Displacement of the accidental windows, ps.
    pub accidental_offset_ps: f64,
    pub pair_rate_hz: f64,
    /// Per-arm channel transmission, excluding the analyzers.
    pub transmission: (f64, f64),
    pub det_a: DetectorModel,
    pub det_b: DetectorModel,
    pub clocks: ClockSetup,
    /// Integration time per phase point, s.
    pub point_integration_s: f64,
    pub mode: RunMode,
    pub seed: u64,
    pub histogram_range_ps: i64,
}

impl ChshSetup {
    fn validate(&self) -> Result<(), ChshError> {
        self.schedule.validate()?;
        let bad = |m: &str| Err(ChshError::InvalidSetup(m.into()));
        if !(self.window_ps > 0.0) {
            return bad("window must be > 0");
        }
        if !(self.accidental_offset_ps >= self.window_ps) {
            return bad("accidental offset must be at least one window from the signal window");
        }
        if !(self.point_integration_s > 0.0 && self.pair_rate_hz >= 0.0) {
            return bad("integration time and pair rate must be positive");
        }
        if !(self.sweep.step_deg > 0.0 && self.sweep.stop_deg > self.sweep.start_deg) {
            return bad("sweep must advance");
        }
        if 2.0 * (self.accidental_offset_ps + self.window_ps) > self.histogram_range_ps as f64 {
            return bad("histogram range must contain the accidental windows");
        }
        Ok(())
    }

    /// σ of `t_B − t_A` added by detectors and taggers, ps.
    pub fn timing_sigma_ps(&self) -> f64 {
        let mut v = self.det_a.jitter_ps.powi(2) + self.det_b.jitter_ps.powi(2);
        if let ClockSetup::TwoTagger { a, b } = self.clocks {
            v += a.jitter_ps.powi(2) + b.jitter_ps.powi(2);
        }
        v.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub beta_deg: f64,
    /// Counts in the signal window.
    pub counts: f64,
    /// Accidental estimate for the same window.
    pub accidentals: f64,
}

impl FringePoint {
    pub fn corrected(&self) -> f64 {
        self.counts - self.accidentals
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub alpha_deg: f64,
    pub points: Vec<FringePoint>,
    pub fit_raw: FringeFit,
    pub fit_corrected: FringeFit,
    /// Center of the post-selection window, ps.
    pub window_center_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshReport {
    pub corrected: ChshResult,
    pub uncorrected: ChshResult,
    pub sweeps: Vec<SweepRecord>,
    pub timing_sigma_ps: f64,
    pub mode: RunMode,
    pub two_tagger: bool,
}

fn ctx_franson(alpha: f64, beta: f64) -> impl Fn(crate::franson::FransonError) -> ChshError {
    move |source| ChshError::Franson { context: format!("setting α={alpha}°, β={beta}°"), source }
}

fn ctx_timetag(alpha: f64, beta: f64) -> impl Fn(crate::timetag::TimetagError) -> ChshError {
    move |source| ChshError::Timetag { context: format!("setting α={alpha}°, β={beta}°"), source }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn point_seed(seed: u64, sweep: usize, point: usize, salt: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ sweep as u64) ^ ((point as u64) << 8) ^ salt)
}

struct PointSpectrum {
    dist: CoincidenceDistribution,
    p_both: f64,
    p_a: f64,
    p_b: f64,
}

fn point_spectrum(setup: &ChshSetup, alpha: f64, beta: f64, p_a: f64) -> Result<PointSpectrum, ChshError> {
    let fa = setup.filter_a.with_phase(alpha.to_radians());
    let fb = setup.filter_b.with_phase(-beta.to_radians());
    let ctx = ctx_franson(alpha, beta);
    let both = apply_filters(&setup.jsa, &fa, &fb).map_err(&ctx)?;
    let only_b = apply_filters(&setup.jsa, &FilterProfile::identity(), &fb).map_err(&ctx)?;
    let dist = time_domain_coincidences(&both);
    Ok(PointSpectrum { p_both: both.norm(), p_a, p_b: only_b.norm(), dist })
}

fn expected_point(setup: &ChshSetup, s: &PointSpectrum, beta: f64) -> FringePoint {
    let t = setup.point_integration_s;
    let eta_a = setup.transmission.0 * setup.det_a.efficiency;
    let eta_b = setup.transmission.1 * setup.det_b.efficiency;
    let jittered = s.dist.with_gaussian_jitter(setup.timing_sigma_ps() * 1e-12);
    let window_s = setup.window_ps * 1e-12;
    let m = jittered.mass_within(0.0, window_s) / s.dist.total().max(f64::MIN_POSITIVE) * s.p_both;
    let singles_a = setup.pair_rate_hz * eta_a * s.p_a + setup.det_a.dark_rate;
    let singles_b = setup.pair_rate_hz * eta_b * s.p_b + setup.det_b.dark_rate;
    let acc = singles_a * singles_b * window_s * t;
    FringePoint { beta_deg: beta, counts: setup.pair_rate_hz * t * eta_a * eta_b * m + acc, accidentals: acc }
}

fn stochastic_hist(
    setup: &ChshSetup,
    s: &PointSpectrum,
    alpha: f64,
    beta: f64,
    sweep_idx: usize,
    point_idx: usize,
    start_ps: i64,
) -> Result<CoincidenceHistogram, ChshError> {
    let ctx = ctx_timetag(alpha, beta);
    let total = s.dist.total();
    let mass: Vec<f64> = s.dist.mass.iter().map(|m| m / total).collect();
    let centers: Vec<f64> = s.dist.delays_s.iter().map(|d| d * 1e12).collect();
    let delay = DelayModel::tabulated(centers, &mass, s.dist.step_s * 1e12).map_err(&ctx)?;
    let source = PairSource::new(setup.pair_rate_hz, setup.transmission, delay).with_routing(
        s.p_both.min(1.0),
        (s.p_a - s.p_both).max(0.0),
        (s.p_b - s.p_both).max(0.0),
    );
    let seed = point_seed(setup.seed, sweep_idx, point_idx, 0);
    let (mut a, mut b) =
        generate_events(&source, &setup.det_a, &setup.det_b, start_ps, setup.point_integration_s, seed).map_err(&ctx)?;
    if let ClockSetup::TwoTagger { a: ca, b: cb } = setup.clocks {
        a = apply_clock(&a, &ca, point_seed(setup.seed, sweep_idx, point_idx, 1));
        b = apply_clock(&b, &cb, point_seed(setup.seed, sweep_idx, point_idx, 2));
    }
    correlate(&a, &b, 1, setup.histogram_range_ps).map_err(&ctx)
}

fn run_sweep(setup: &ChshSetup, sweep_idx: usize, alpha: f64, betas: &[f64]) -> Result<SweepRecord, ChshError> {
    let fa = setup.filter_a.with_phase(alpha.to_radians());
    let p_a = apply_filters(&setup.jsa, &fa, &FilterProfile::identity()).map_err(ctx_franson(alpha, f64::NAN))?.norm();
    let point_ps = (setup.point_integration_s * 1e12).round() as i64;
    let (points, center) = match setup.mode {
        RunMode::Expected => {
            let pts = betas
                .par_iter()
                .map(|&beta| point_spectrum(setup, alpha, beta, p_a).map(|s| expected_point(setup, &s, beta)))
                .collect::<Result<Vec<_>, _>>()?;
            (pts, 0.0)
        }
        RunMode::Stochastic => {
            let n_pts = betas.len() as i64;
            let hists = betas
                .par_iter()
                .enumerate()
                .map(|(j, &beta)| {
                    let s = point_spectrum(setup, alpha, beta, p_a)?;
                    let start = (sweep_idx as i64 * n_pts + j as i64) * point_ps;
                    stochastic_hist(setup, &s, alpha, beta, sweep_idx, j, start)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut acc = HistogramAccumulator::new();
            for h in &hists {
                acc.add(h).map_err(ctx_timetag(alpha, f64::NAN))?;
            }
            let merged = acc.finish().expect("sweep has points");
            let tau_ps = setup.filter_a.tau_s * 1e12;
            let center = if tau_ps.is_finite() {
                structure_center(&merged, tau_ps)
            } else {
                0.0
            };
            let pts = hists
                .iter()
                .zip(betas)
                .map(|(h, &beta)| {
                    car(h, center, setup.window_ps, setup.accidental_offset_ps)
                        .map(|r| FringePoint { beta_deg: beta, counts: r.signal_counts, accidentals: r.accidental_counts })
                        .map_err(ctx_timetag(alpha, beta))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (pts, center)
        }
    };
    let opts = FringeFitOptions::default();
    let raw: Vec<(f64, f64)> = points.iter().map(|p| (p.beta_deg.to_radians(), p.counts)).collect();
    let cor: Vec<(f64, f64)> = points.iter().map(|p| (p.beta_deg.to_radians(), p.corrected())).collect();
    let ctx = |e: ChshError| match e {
        ChshError::FitDiverged(m) => ChshError::FitDiverged(format!("sweep α={alpha}°: {m}")),
        other => other,
    };
    Ok(SweepRecord {
        alpha_deg: alpha,
        fit_raw: fit_fringe(&raw, opts).map_err(ctx)?,
        fit_corrected: fit_fringe(&cor, opts).map_err(ctx)?,
        points,
        window_center_ps: center,
    })
}

fn score(schedule: &AngleSchedule, fits: &[FringeFit; 4]) -> Result<ChshResult, ChshError> {
    // fits are ordered α, α⊥, α′, α′⊥
    let (a, ap) = ((0, 1), (2, 3));
    let term = |(par, perp): (usize, usize), beta: f64| {
        let c = |k: usize, b: f64| fits[k].eval_deg(b).max(0.0);
        correlator(&CorrelatorCounts::new(c(par, beta), c(par, beta + 90.0), c(perp, beta), c(perp, beta + 90.0)))
    };
    let cs = [
        term(a, schedule.beta)?,
        term(a, schedule.beta_prime)?,
        term(ap, schedule.beta)?,
        term(ap, schedule.beta_prime)?,
    ];
    let v = fits.iter().map(|f| f.visibility).sum::<f64>() / 4.0;
    Ok(chsh_score(cs, schedule.signs).with_visibility(v))
}

/// Sweeps B over `setup.sweep` for each fixed A setting in α, α⊥, α′, α′⊥,
/// post-selects the central peak, fits the fringes and scores the CHSH
/// combination with and without accidental subtraction.
/// Center of the symmetric three-peak structure: the count centroid
/// within ±2τ, re-centered until it settles. Seeded by the triple-peak
/// midpoint when the side peaks are resolvable.
fn structure_center(h: &CoincidenceHistogram, tau_ps: f64) -> f64 {
    let mut c = segment_triple_peak(h, tau_ps).map(|t| t.midpoint_ps).unwrap_or(0.0);
    for _ in 0..8 {
        let (mut m0, mut m1) = (0.0, 0.0);
        for (d, &n) in h.delays_ps().into_iter().zip(h.counts()) {
            if (d - c).abs() <= 2.0 * tau_ps {
                m0 += n as f64;
                m1 += n as f64 * d;
            }
        }
        if m0 == 0.0 {
            break;
        }
        let next = m1 / m0;
        let done = (next - c).abs() < 0.01;
        c = next;
        if done {
            break;
        }
    }
    c
}

pub fn run_chsh(setup: &ChshSetup) -> Result<ChshReport, ChshError> {
    setup.validate()?;
    let betas = setup.sweep.angles();
    let sweeps = setup
        .schedule
        .a_settings()
        .iter()
        .enumerate()
        .map(|(k, &alpha)| run_sweep(setup, k, alpha, &betas))
        .collect::<Result<Vec<_>, _>>()?;
    let raw: [FringeFit; 4] = std::array::from_fn(|k| sweeps[k].fit_raw);
    let cor: [FringeFit; 4] = std::array::from_fn(|k| sweeps[k].fit_corrected);
    Ok(ChshReport {
        corrected: score(&setup.schedule, &cor)?,
        uncorrected: score(&setup.schedule, &raw)?,
        sweeps,
        timing_sigma_ps: setup.timing_sigma_ps(),
        mode: setup.mode,
        two_tagger: matches!(setup.clocks, ClockSetup::TwoTagger { .. }),
    })
}

/// `beta_deg,counts,accidentals,corrected,fit_raw,fit_corrected`.
pub fn write_fringe_csv<W: Write>(sweep: &SweepRecord, w: W) -> Result<(), ChshError> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "beta_deg,counts,accidentals,corrected,fit_raw,fit_corrected")?;
    for p in &sweep.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.beta_deg,
            p.counts,
            p.accidentals,
            p.corrected(),
            sweep.fit_raw.eval_deg(p.beta_deg),
            sweep.fit_corrected.eval_deg(p.beta_deg)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_result<W: Write>(w: &mut W, label: &str, r: &ChshResult) -> std::io::Result<()> {
    writeln!(w, "[{label}]")?;
    for (k, c) in r.correlators.iter().enumerate() {
        writeln!(
            w,
            "E{k} = {:+.5}  sign {:+}  var_exact {:.3e}  var_conservative {:.3e}  N {:.1}",
            c.e, r.signs[k], c.variance_exact, c.variance_conservative, c.total
        )?;
    }
    writeln!(w, "S_signed = {:+.4}", r.s_signed)?;
    writeln!(w, "S = {:.4} ± {:.4}  (conservative ± {:.4})", r.s, r.sigma_s, r.sigma_s_conservative)?;
    writeln!(w, "significance = {:.1} sigma  (conservative {:.1})", r.significance, r.significance_conservative)?;
    if let (Some(v), Some(sa)) = (r.mean_visibility, r.s_approx) {
        writeln!(w, "mean_visibility = {:.4}", v)?;
        writeln!(w, "S_approx = {:.4}", sa)?;
    }
    if r.unphysical {
        writeln!(w, "warning: S exceeds 2√2")?;
    }
    writeln!(w)
}

/// Plain-text summary of both scorings and the per-sweep fits.
pub fn write_report<W: Write>(report: &ChshReport, mut w: W) -> Result<(), ChshError> {
    writeln!(w, "# chsh report")?;
    writeln!(w, "mode = {:?}", report.mode)?;
    writeln!(w, "taggers = {}", if report.two_tagger { 2 } else { 1 })?;
    writeln!(w, "timing_sigma_ps = {:.2}", report.timing_sigma_ps)?;
    writeln!(w)?;
    write_result(&mut w, "accidentals subtracted", &report.corrected)?;
    write_result(&mut w, "raw", &report.uncorrected)?;
    writeln!(w, "[sweeps]")?;
    for s in &report.sweeps {
        writeln!(
            w,
            "alpha = {:>6.1}°  V_raw {:.4}  V_corrected {:.4}  delta {:+.4} rad  center {:+.2} ps",
            s.alpha_deg, s.fit_raw.visibility, s.fit_corrected.visibility, s.fit_corrected.phase_offset, s.window_center_ps
        )?;
    }
    Ok(())
}
