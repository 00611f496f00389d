//! Scenario files: TOML documents naming source, filter, link, detector,
//! clock and sweep blocks, resolved into ready-to-run simulation setups.
//!
//! ```toml
//! seed = 7
//! [source]
//! pump = "cw"
//! pump_nm = 1550.0
//! signal_nm = 1530.0
//! [detector.snspd]
//! efficiency = 0.8
//! [setup]
//! detector_a = "snspd"
//! detector_b = "snspd"
//! ```

mod runs;

pub use runs::{
    fit_peak, run_histogram, run_source, run_tof, write_chsh_outputs, write_histogram_outputs, write_source_outputs,
    write_tof_outputs, HistogramRun, SourceRun, TofRun,
};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::chsh::{AngleSchedule, ChshSetup, ClockSetup, RunMode, SweepSchedule};
use crate::franson::{make_cosine_filter, Envelope, FilterProfile, DEFAULT_TAU_S};
use crate::link::{apply_compensation, apply_dispersion, FiberLink, D_SMF28};
use crate::spectral::{compute_jsa, Axis, FrequencyGrid, JointSpectralAmplitude, PumpSpectrum, WaveguideDispersion};
use crate::timetag::{ClockModel, DetectorModel};
use crate::units::{angular_to_wavelength_nm, bandwidth_nm_to_angular, bandwidth_nm_to_hz, wavelength_nm_to_angular};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("missing block `{block}`{}", referenced_by.as_ref().map(|r| format!(" (referenced by `{r}`)")).unwrap_or_default())]
    MissingBlock { block: String, referenced_by: Option<String> },
    #[error("`{path}`: {message}")]
    Invalid { path: String, message: String },
    /// A fit or estimator failed on the simulated data.
    #[error("`{path}`: {message}")]
    Numeric { path: String, message: String },
    #[error("stochastic runs need a seed (set `seed` or pass --seed)")]
    MissingSeed,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e.to_string())
    }
}

fn invalid(path: &str, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), message: message.to_string() }
}

fn missing(block: &str, by: Option<&str>) -> ScenarioError {
    ScenarioError::MissingBlock { block: block.into(), referenced_by: by.map(String::from) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpKind {
    Cw,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub pump: PumpKind,
    pub pump_nm: f64,
    /// Power-spectrum FWHM of a pulsed pump.
    pub pump_fwhm_nm: Option<f64>,
    pub signal_nm: f64,
    /// Defaults to the energy-conserving partner of `signal_nm`.
    pub idler_nm: Option<f64>,
    #[serde(default = "default_length_cm")]
    pub length_cm: f64,
    /// Group-velocity-dispersion coefficient of the waveguide, s²/m.
    #[serde(default = "default_f2")]
    pub f2: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Sets the grid through its delay resolution; exclusive with `span_nm`.
    pub delay_step_ps: Option<f64>,
    /// Width of each frequency axis, in nm at the signal wavelength.
    pub span_nm: Option<f64>,
    /// Emitted pairs per second.
    pub pair_rate_hz: Option<f64>,
}

fn default_length_cm() -> f64 {
    5.0
}
fn default_f2() -> f64 {
    WaveguideDispersion::default().f2
}
fn default_grid_points() -> usize {
    256
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    #[default]
    Cosine,
    Bandpass,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    #[default]
    Gaussian,
    Square,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltersBlock {
    #[serde(default)]
    pub kind: FilterKind,
    #[serde(default = "default_tau_ps")]
    pub tau_ps: f64,
    #[serde(default)]
    pub envelope: EnvelopeKind,
    /// Power FWHM (gaussian) or passband (square), nm.
    pub width_nm: Option<f64>,
    #[serde(default)]
    pub phase_a: f64,
    #[serde(default)]
    pub phase_b: f64,
    pub pixel_ghz: Option<f64>,
    #[serde(default)]
    pub insertion_loss_db: f64,
}

fn default_tau_ps() -> f64 {
    DEFAULT_TAU_S * 1e12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArmKind {
    Signal,
    #[default]
    Idler,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBlock {
    pub length_km: f64,
    #[serde(default = "default_loss")]
    pub loss_db_per_km: f64,
    #[serde(default = "default_d")]
    pub dispersion: f64,
    /// Defaults to the carrying arm's center wavelength.
    pub lambda0_nm: Option<f64>,
    #[serde(default)]
    pub connector_losses_db: Vec<f64>,
    #[serde(default)]
    pub arm: ArmKind,
    /// D used for the compensating spectral phase; absent means none.
    pub compensation_d: Option<f64>,
    pub compensation_length_km: Option<f64>,
}

fn default_loss() -> f64 {
    0.2
}
fn default_d() -> f64 {
    D_SMF28
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupBlock {
    pub detector_a: String,
    pub detector_b: String,
    pub clock_a: Option<String>,
    pub clock_b: Option<String>,
    pub link: Option<String>,
    /// Extra per-arm transmission (couplers, analyzers), multiplied in.
    #[serde(default = "one")]
    pub transmission_a: f64,
    #[serde(default = "one")]
    pub transmission_b: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "default_schedule")]
    pub schedule: String,
    #[serde(default)]
    pub start_deg: f64,
    #[serde(default = "default_stop")]
    pub stop_deg: f64,
    #[serde(default = "default_step")]
    pub step_deg: f64,
    #[serde(default = "default_window")]
    pub window_ps: f64,
    #[serde(default = "default_acc_offset")]
    pub accidental_offset_ps: f64,
    pub point_integration_s: f64,
    #[serde(default = "default_range")]
    pub histogram_range_ps: i64,
}

fn default_schedule() -> String {
    "canonical".into()
}
fn default_stop() -> f64 {
    275.0
}
fn default_step() -> f64 {
    7.0
}
fn default_window() -> f64 {
    20.0
}
fn default_acc_offset() -> f64 {
    150.0
}
fn default_range() -> i64 {
    400
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramBlock {
    pub integration_s: f64,
    #[serde(default = "default_bin")]
    pub bin_ps: i64,
    pub range_ps: i64,
    pub accidental_offset_ps: f64,
    /// Gaussian pair correlation; absent means the delay distribution is
    /// taken from the filtered source spectrum.
    pub correlation_sigma_ps: Option<f64>,
    pub pair_rate_hz: Option<f64>,
}

fn default_bin() -> i64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PeakKind {
    #[default]
    Single,
    Franson,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TofBlock {
    pub epochs: usize,
    pub epoch_interval_s: f64,
    pub epoch_integration_s: f64,
    pub pair_rate_hz: f64,
    #[serde(default = "default_sigma")]
    pub correlation_sigma_ps: f64,
    #[serde(default = "default_bin")]
    pub bin_ps: i64,
    pub range_ps: i64,
    /// Fit half-window around the tallest bin, ps.
    #[serde(default = "default_fit_half")]
    pub fit_half_width_ps: f64,
    #[serde(default)]
    pub peak: PeakKind,
}

fn default_sigma() -> f64 {
    10.0
}
fn default_fit_half() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    mode: Option<String>,
    source: Option<SourceBlock>,
    filters: Option<FiltersBlock>,
    #[serde(default)]
    link: BTreeMap<String, LinkBlock>,
    #[serde(default)]
    detector: BTreeMap<String, DetectorModel>,
    #[serde(default)]
    clock: BTreeMap<String, ClockModel>,
    setup: Option<SetupBlock>,
    sweep: Option<SweepBlock>,
    histogram: Option<HistogramBlock>,
    tof: Option<TofBlock>,
}

/// A parsed scenario. Blocks are resolved lazily by each command so a
/// source-only file is valid for `source` but not for `chsh`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    file: ScenarioFile,
    base_dir: PathBuf,
}

/// Detectors, clocks and per-arm transmission wired by `[setup]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wiring {
    pub det_a: DetectorModel,
    pub det_b: DetectorModel,
    pub clocks: ClockSetup,
    pub link: Option<(String, LinkBlock)>,
    pub transmission: (f64, f64),
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.message().to_string()))?;
        Ok(Self { file, base_dir: PathBuf::from(".") })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(s)
    }

    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or("scenario")
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.file.output_dir.as_deref()
    }

    /// Explicit override, else the file's seed; error when neither is set.
    pub fn seed(&self, cli: Option<u64>) -> Result<u64, ScenarioError> {
        cli.or(self.file.seed).ok_or(ScenarioError::MissingSeed)
    }

    pub fn mode(&self) -> Result<RunMode, ScenarioError> {
        match self.file.mode.as_deref() {
            None | Some("stochastic") => Ok(RunMode::Stochastic),
            Some("expected") => Ok(RunMode::Expected),
            Some(other) => Err(invalid("mode", format!("expected `stochastic` or `expected`, got `{other}`"))),
        }
    }

    pub fn source(&self) -> Result<&SourceBlock, ScenarioError> {
        self.file.source.as_ref().ok_or_else(|| missing("source", None))
    }

    pub fn setup_block(&self) -> Result<&SetupBlock, ScenarioError> {
        self.file.setup.as_ref().ok_or_else(|| missing("setup", None))
    }

    pub fn histogram_block(&self) -> Result<&HistogramBlock, ScenarioError> {
        self.file.histogram.as_ref().ok_or_else(|| missing("histogram", None))
    }

    pub fn tof_block(&self) -> Result<&TofBlock, ScenarioError> {
        self.file.tof.as_ref().ok_or_else(|| missing("tof", None))
    }

    pub fn sweep_block(&self) -> Result<&SweepBlock, ScenarioError> {
        self.file.sweep.as_ref().ok_or_else(|| missing("sweep", None))
    }

    pub fn pair_rate_hz(&self, local: Option<f64>, path: &str) -> Result<f64, ScenarioError> {
        local
            .or_else(|| self.file.source.as_ref().and_then(|s| s.pair_rate_hz))
            .ok_or_else(|| invalid(path, "no pair rate (set it here or in `source.pair_rate_hz`)"))
    }

    /// Unfiltered biphoton spectrum of `[source]`.
    pub fn build_jsa(&self) -> Result<JointSpectralAmplitude, ScenarioError> {
        let s = self.source()?;
        let wp = wavelength_nm_to_angular(s.pump_nm);
        let ws = wavelength_nm_to_angular(s.signal_nm);
        let wi = s.idler_nm.map(wavelength_nm_to_angular).unwrap_or(2.0 * wp - ws);
        let grid = match (s.delay_step_ps, s.span_nm) {
            (Some(dt), None) => FrequencyGrid::for_delay_step(ws, wi, s.grid_points, dt * 1e-12),
            (None, Some(span)) => FrequencyGrid::new(ws, wi, bandwidth_nm_to_angular(s.signal_nm, span), s.grid_points),
            (None, None) => return Err(invalid("source", "set one of `delay_step_ps` or `span_nm`")),
            (Some(_), Some(_)) => return Err(invalid("source", "`delay_step_ps` and `span_nm` are exclusive")),
        }
        .map_err(|e| invalid("source", e))?;
        let pump = match s.pump {
            PumpKind::Cw => PumpSpectrum::cw(wp),
            PumpKind::Gaussian => {
                let fwhm = s.pump_fwhm_nm.ok_or_else(|| invalid("source.pump_fwhm_nm", "required for a gaussian pump"))?;
                PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(s.pump_nm, fwhm))
            }
        }
        .map_err(|e| invalid("source", e))?;
        let disp = WaveguideDispersion::default().with_length(s.length_cm * 1e-2).with_f2(s.f2);
        compute_jsa(&pump, &grid, &disp).map_err(|e| invalid("source", e))
    }

    /// Analyzer filters A (signal) and B (idler) centered on the grid's channels.
    pub fn build_filters(&self, grid: &FrequencyGrid) -> Result<(FilterProfile, FilterProfile), ScenarioError> {
        let f = self.file.filters.as_ref().ok_or_else(|| missing("filters", None))?;
        let ca = grid.center_s() / std::f64::consts::TAU;
        let cb = grid.center_i() / std::f64::consts::TAU;
        let lambda_a = angular_to_wavelength_nm(grid.center_s());
        let lambda_b = angular_to_wavelength_nm(grid.center_i());
        let env = |lambda: f64| -> Result<Envelope, ScenarioError> {
            Ok(match f.envelope {
                EnvelopeKind::Flat => Envelope::Flat,
                kind => {
                    let w = f.width_nm.ok_or_else(|| invalid("filters.width_nm", "required for this envelope"))?;
                    let hz = bandwidth_nm_to_hz(lambda, w);
                    if kind == EnvelopeKind::Gaussian {
                        Envelope::Gaussian { fwhm_hz: hz }
                    } else {
                        Envelope::Square { passband_hz: hz }
                    }
                }
            })
        };
        let make = |center: f64, lambda: f64, phase: f64| -> Result<FilterProfile, ScenarioError> {
            let p = match f.kind {
                FilterKind::Cosine => make_cosine_filter(center, f.tau_ps * 1e-12, phase, env(lambda)?)
                    .map_err(|e| invalid("filters", e))?,
                FilterKind::Bandpass => FilterProfile::bandpass(center, env(lambda)?),
                FilterKind::None => FilterProfile::identity(),
            };
            Ok(p.with_pixel(f.pixel_ghz.map(|g| g * 1e9)).with_insertion_loss(f.insertion_loss_db))
        };
        Ok((make(ca, lambda_a, f.phase_a)?, make(cb, lambda_b, f.phase_b)?))
    }

    pub fn wiring(&self) -> Result<Wiring, ScenarioError> {
        let set = self.setup_block()?;
        let det = |name: &str, by: &str| -> Result<DetectorModel, ScenarioError> {
            let d = *self.file.detector.get(name).ok_or_else(|| missing(&format!("detector.{name}"), Some(by)))?;
            d.validate().map_err(|e| invalid(&format!("detector.{name}"), e))?;
            Ok(d)
        };
        let clock = |name: &str, by: &str| -> Result<ClockModel, ScenarioError> {
            let c = *self.file.clock.get(name).ok_or_else(|| missing(&format!("clock.{name}"), Some(by)))?;
            c.validate().map_err(|e| invalid(&format!("clock.{name}"), e))?;
            Ok(c)
        };
        let clocks = match (&set.clock_a, &set.clock_b) {
            (None, None) => ClockSetup::SingleTagger,
            (Some(a), Some(b)) => ClockSetup::TwoTagger { a: clock(a, "setup.clock_a")?, b: clock(b, "setup.clock_b")? },
            _ => return Err(invalid("setup", "set both `clock_a` and `clock_b`, or neither")),
        };
        let link = match &set.link {
            Some(name) => {
                let l = self.file.link.get(name).ok_or_else(|| missing(&format!("link.{name}"), Some("setup.link")))?;
                Some((name.clone(), l.clone()))
            }
            None => None,
        };
        let unit = |x: f64, p: &str| if (0.0..=1.0).contains(&x) { Ok(x) } else { Err(invalid(p, "must lie in [0, 1]")) };
        let mut ta = unit(set.transmission_a, "setup.transmission_a")?;
        let mut tb = unit(set.transmission_b, "setup.transmission_b")?;
        if let Some((name, l)) = &link {
            let t = self.fiber(name, l, 1550.0)?.transmission();
            match l.arm {
                ArmKind::Signal => ta *= t,
                ArmKind::Idler => tb *= t,
            }
        }
        Ok(Wiring {
            det_a: det(&set.detector_a, "setup.detector_a")?,
            det_b: det(&set.detector_b, "setup.detector_b")?,
            clocks,
            link,
            transmission: (ta, tb),
        })
    }

    fn fiber(&self, name: &str, l: &LinkBlock, default_lambda0: f64) -> Result<FiberLink, ScenarioError> {
        FiberLink::new(
            l.length_km,
            l.loss_db_per_km,
            l.dispersion,
            l.lambda0_nm.unwrap_or(default_lambda0),
            l.connector_losses_db.clone(),
        )
        .map_err(|e| invalid(&format!("link.{name}"), e))
    }

    /// Applies the wired link's dispersion and, when `compensate`, its
    /// compensating phase to the carrying arm.
    pub fn propagate(
        &self,
        jsa: &JointSpectralAmplitude,
        wiring: &Wiring,
        compensate: bool,
    ) -> Result<JointSpectralAmplitude, ScenarioError> {
        let Some((name, l)) = &wiring.link else { return Ok(jsa.clone()) };
        let (axis, center) = match l.arm {
            ArmKind::Signal => (Axis::Signal, jsa.grid().center_s()),
            ArmKind::Idler => (Axis::Idler, jsa.grid().center_i()),
        };
        let lambda0 = l.lambda0_nm.unwrap_or(angular_to_wavelength_nm(center));
        let fiber = self.fiber(name, l, lambda0)?;
        let path = format!("link.{name}");
        let mut out = apply_dispersion(jsa, &fiber, axis).map_err(|e| invalid(&path, e))?;
        if compensate {
            if let Some(d) = l.compensation_d {
                let len = l.compensation_length_km.unwrap_or(l.length_km);
                out = apply_compensation(&out, d, len, lambda0, axis).map_err(|e| invalid(&path, e))?;
            }
        }
        Ok(out)
    }

    pub fn has_compensation(&self, wiring: &Wiring) -> bool {
        wiring.link.as_ref().is_some_and(|(_, l)| l.compensation_d.is_some())
    }

    pub fn chsh_setup(&self, seed: Option<u64>) -> Result<ChshSetup, ScenarioError> {
        let sweep = self.sweep_block()?;
        let mode = self.mode()?;
        let seed = match mode {
            RunMode::Stochastic => self.seed(seed)?,
            RunMode::Expected => self.seed(seed).unwrap_or(0),
        };
        let wiring = self.wiring()?;
        let jsa = self.propagate(&self.build_jsa()?, &wiring, true)?;
        let (filter_a, filter_b) = self.build_filters(jsa.grid())?;
        if filter_a.tau_s.is_infinite() {
            return Err(invalid("filters.kind", "chsh needs cosine filters"));
        }
        let schedule = AngleSchedule::by_name(&sweep.schedule)
            .ok_or_else(|| invalid("sweep.schedule", format!("unknown schedule `{}`", sweep.schedule)))?;
        Ok(ChshSetup {
            jsa,
            filter_a,
            filter_b,
            schedule,
            sweep: SweepSchedule { start_deg: sweep.start_deg, stop_deg: sweep.stop_deg, step_deg: sweep.step_deg },
            window_ps: sweep.window_ps,
            accidental_offset_ps: sweep.accidental_offset_ps,
            pair_rate_hz: self.pair_rate_hz(None, "source.pair_rate_hz")?,
            transmission: wiring.transmission,
            det_a: wiring.det_a,
            det_b: wiring.det_b,
            clocks: wiring.clocks,
            point_integration_s: sweep.point_integration_s,
            mode,
            seed,
            histogram_range_ps: sweep.histogram_range_ps,
        })
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
[source]
pump = "cw"
pump_nm = 1550.0
signal_nm = 1530.0
grid_points = 64
delay_step_ps = 2.0
pair_rate_hz = 1e5
[filters]
width_nm = 2.0
[detector.snspd]
efficiency = 0.8
jitter_ps = 10.0
[setup]
detector_a = "snspd"
detector_b = "snspd"
[sweep]
point_integration_s = 0.1
"#;

    #[test]
    fn minimal_scenario_resolves() {
        let s = Scenario::parse(MINIMAL).unwrap();
        let setup = s.chsh_setup(None).unwrap();
        assert_eq!(setup.seed, 3);
        assert_eq!(setup.sweep.step_deg, 7.0);
        assert_eq!(setup.clocks, ClockSetup::SingleTagger);
        assert!((setup.filter_a.tau_s - 42e-12).abs() < 1e-24);
    }

    #[test]
    fn dangling_reference_names_the_block() {
        let text = MINIMAL.replace("detector_b = \"snspd\"", "detector_b = \"apd\"");
        let err = Scenario::parse(&text).unwrap().chsh_setup(None).unwrap_err();
        assert_eq!(err, missing("detector.apd", Some("setup.detector_b")));
        assert!(err.to_string().contains("detector.apd"));
    }

    #[test]
    fn missing_seed_is_reported() {
        let text = MINIMAL.replace("seed = 3", "");
        let err = Scenario::parse(&text).unwrap().chsh_setup(None).unwrap_err();
        assert_eq!(err, ScenarioError::MissingSeed);
        assert!(Scenario::parse(&text).unwrap().chsh_setup(Some(9)).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("width_nm = 2.0", "width_nm = 2.0\nwidht = 1");
        assert!(matches!(Scenario::parse(&text), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn missing_block_for_command() {
        let s = Scenario::parse("seed = 1").unwrap();
        assert_eq!(s.build_jsa().unwrap_err(), missing("source", None));
        assert_eq!(s.histogram_block().unwrap_err(), missing("histogram", None));
    }
}
