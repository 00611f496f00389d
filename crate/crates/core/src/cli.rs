//! The `qlan` command line.
//!
//! Every subcommand writes CSV/text artifacts under `--out` and prints a
//! short summary on stdout. Failures print a single line
//! `error[config]: ...` (exit 2) or `error[numeric]: ...` (exit 3).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chsh::{run_chsh, ChshError};
use crate::parallel::{thread_cap_from_env, with_thread_cap};
use crate::scenario::{
    fit_peak, run_histogram, run_source, run_tof, write_chsh_outputs, write_histogram_outputs, write_source_outputs,
    write_tof_outputs, Scenario, ScenarioError, TofRun,
};
use crate::telemetry::{
    pearson, read_series_csv, read_telemetry_csv, render_table, resample_and_align, split_threshold_fit,
    write_report_csv, OutlierPolicy, TelemetryError, TimeSeries, DEFAULT_WINDOW_S,
};
use crate::timetag::{
    car, correlate, epoch_histograms, read_tag_file, track_peak_drift, write_histogram_csv, PeakMode, TimeTagStream,
    TimetagError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
}

/// A failed command: class decides the exit code and the message prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Config, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Numeric, message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self.class {
            ErrorClass::Config => 2,
            ErrorClass::Numeric => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.class {
            ErrorClass::Config => "config",
            ErrorClass::Numeric => "numeric",
        };
        // One line, whatever the source message contained.
        write!(f, "error[{tag}]: {}", self.message.replace('\n', " "))
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Numeric { .. } => CliError::numeric(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<ChshError> for CliError {
    fn from(e: ChshError) -> Self {
        match &e {
            ChshError::FitDiverged(_) | ChshError::ZeroTotal => CliError::numeric(e.to_string()),
            ChshError::Timetag { source: TimetagError::FitDiverged(_) | TimetagError::InsufficientData(_), .. } => {
                CliError::numeric(e.to_string())
            }
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<TelemetryError> for CliError {
    fn from(e: TelemetryError) -> Self {
        match e {
            TelemetryError::DegenerateVariance(_) | TelemetryError::InsufficientData { .. } => {
                CliError::numeric(e.to_string())
            }
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<TimetagError> for CliError {
    fn from(e: TimetagError) -> Self {
        match e {
            TimetagError::FitDiverged(_) | TimetagError::InsufficientData(_) => CliError::numeric(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qlan", version, about = "Energy-time entanglement link simulator and analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint spectrum, marginals and purity of the scenario source.
    Source {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Full CHSH experiment: fringe tables and the S report.
    Chsh {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pearson correlation of telemetry series.
    Correlate {
        /// Telemetry CSV files (multi-column or `timestamp,value`).
        #[arg(long = "file", required = true, num_args = 1..)]
        files: Vec<PathBuf>,
        /// `x,y` column names; y is regressed on x. Repeatable.
        #[arg(long = "pair", required = true)]
        pairs: Vec<String>,
        /// Resampling window, seconds.
        #[arg(long, default_value_t = DEFAULT_WINDOW_S)]
        window: f64,
        /// Split every pair at this x value as well.
        #[arg(long)]
        threshold: Option<f64>,
        /// Drop samples beyond k median absolute deviations per window.
        #[arg(long)]
        mad: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Time-of-flight drift track from a scenario or two tag files.
    Tof {
        #[arg(long, conflicts_with_all = ["tags_a", "tags_b"])]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        tags: TagInput,
        /// Epoch length when reading tag files, seconds.
        #[arg(long, default_value_t = 1.0)]
        epoch_s: f64,
        #[arg(long, value_enum, default_value_t = PeakArg::Single)]
        peak: PeakArg,
        /// Franson delay for `--peak franson`, ps.
        #[arg(long, default_value_t = 42.0)]
        tau_ps: f64,
        /// Fit half-width around the tallest bin for `--peak single`, ps.
        #[arg(long, default_value_t = 60.0)]
        half_width_ps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Coincidence histogram, Gaussian fit and CAR.
    Histogram {
        #[arg(long, conflicts_with_all = ["tags_a", "tags_b"])]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        tags: TagInput,
        /// Offset of the accidental windows when reading tag files, ps.
        #[arg(long)]
        accidental_offset_ps: Option<f64>,
        /// Also write the simulated tag streams.
        #[arg(long)]
        emit_tags: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct TagInput {
    #[arg(long, requires = "tags_b")]
    pub tags_a: Option<PathBuf>,
    #[arg(long, requires = "tags_a")]
    pub tags_b: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub bin_ps: i64,
    #[arg(long, default_value_t = 2000)]
    pub range_ps: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PeakArg {
    Single,
    Franson,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                eprintln!("{}", CliError::config(e.kind().to_string() + ": " + &first_line(&e.to_string())));
                return ExitCode::from(2);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match with_thread_cap(thread_cap_from_env(), || execute(&cli.command)) {
        Ok(summary) => {
            let _ = stdout.write_all(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").trim_start_matches("error: ").to_string()
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    Ok(Scenario::load(path)?)
}

fn out_dir(common: &Common, scenario: Option<&Scenario>) -> PathBuf {
    // An explicit --out wins; otherwise a scenario's output_dir.
    match scenario.and_then(|s| s.output_dir()) {
        Some(d) if common.out == Path::new("out") => d.to_path_buf(),
        _ => common.out.clone(),
    }
}

fn create(dir: &Path, name: &str) -> Result<File, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    File::create(&p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))
}

fn read_tags(path: &Path) -> Result<TimeTagStream, CliError> {
    let f = File::open(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    read_tag_file(BufReader::new(f), Some(path.to_path_buf()))
        .map_err(|e| CliError::from(e).prefixed(&path.display().to_string()))
}

impl CliError {
    fn prefixed(mut self, ctx: &str) -> Self {
        self.message = format!("{ctx}: {}", self.message);
        self
    }
}

/// Runs one command; the stdout summary is returned for the caller to
/// print.
pub fn execute(cmd: &Command) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let w = &mut buf;
    let io = |e: std::io::Error| CliError::config(e.to_string());
    match cmd {
        Command::Source { scenario, common } => {
            let sc = load(scenario)?;
            let dir = out_dir(common, Some(&sc));
            let run = run_source(&sc)?;
            write_source_outputs(&run, &dir)?;
            writeln!(w, "purity = {:.6}", run.purity).map_err(io)?;
            writeln!(w, "wrote {}", dir.display()).map_err(io)?;
        }
        Command::Chsh { scenario, common } => {
            let sc = load(scenario)?;
            let dir = out_dir(common, Some(&sc));
            let setup = sc.chsh_setup(common.seed)?;
            let report = run_chsh(&setup)?;
            write_chsh_outputs(&report, &dir)?;
            let c = &report.corrected;
            let u = &report.uncorrected;
            writeln!(w, "S (corrected)   = {:.4} ± {:.4}  ({:.1} σ)", c.s, c.sigma_s, c.significance).map_err(io)?;
            writeln!(w, "S (uncorrected) = {:.4} ± {:.4}  ({:.1} σ)", u.s, u.sigma_s, u.significance).map_err(io)?;
            writeln!(w, "wrote {}", dir.display()).map_err(io)?;
        }
        Command::Correlate { files, pairs, window, threshold, mad, common } => {
            let series = load_series(files)?;
            let policy = match mad {
                Some(k) => OutlierPolicy::Mad { k: *k },
                None => OutlierPolicy::None,
            };
            let mut reports = Vec::new();
            for spec in pairs {
                let (xn, yn) = spec
                    .split_once(',')
                    .map(|(a, b)| (a.trim(), b.trim()))
                    .ok_or_else(|| CliError::config(format!("pair `{spec}`: expected `x,y`")))?;
                let find = |n: &str| {
                    series.iter().find(|s| s.name() == n).ok_or_else(|| {
                        CliError::config(format!(
                            "missing column `{n}` (have: {})",
                            series.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
                        ))
                    })
                };
                let pairs = resample_and_align(find(xn)?, find(yn)?, *window, policy)?;
                let report = match threshold {
                    Some(t) => split_threshold_fit(&pairs, *t)?,
                    None => pearson(&pairs)?,
                };
                reports.push(report);
            }
            let dir = &common.out;
            write_report_csv(&reports, create(dir, "correlation.csv")?)?;
            write!(w, "{}", render_table(&reports)).map_err(io)?;
        }
        Command::Tof { scenario, tags, epoch_s, peak, tau_ps, half_width_ps, common } => {
            let (run, dir) = match scenario {
                Some(p) => {
                    let sc = load(p)?;
                    (run_tof(&sc, common.seed)?, out_dir(common, Some(&sc)))
                }
                None => {
                    let (a, b) = tag_pair(tags)?;
                    let epoch_ps = (epoch_s * 1e12).round() as i64;
                    if epoch_ps <= 0 {
                        return Err(CliError::config("--epoch-s must be positive"));
                    }
                    let epochs = epoch_histograms(&a, &b, epoch_ps, tags.bin_ps, tags.range_ps)?;
                    let mode = match peak {
                        PeakArg::Single => PeakMode::SingleWindowed { half_width_ps: *half_width_ps },
                        PeakArg::Franson => PeakMode::Franson { tau_ps: *tau_ps },
                    };
                    (TofRun::from_records(track_peak_drift(&epochs, mode)), common.out.clone())
                }
            };
            write_tof_outputs(&run, &dir)?;
            let gaps = run.records.iter().filter(|r| r.error.is_some()).count();
            writeln!(w, "epochs = {} (gaps {gaps})", run.records.len()).map_err(io)?;
            writeln!(w, "max |Δτ| = {:.3} ps, slope = {:.4} ps/hr", run.max_abs_drift_ps, run.slope_ps_per_hr)
                .map_err(io)?;
            writeln!(w, "wrote {}", dir.display()).map_err(io)?;
        }
        Command::Histogram { scenario, tags, accidental_offset_ps, emit_tags, common } => match scenario {
            Some(p) => {
                let sc = load(p)?;
                let dir = out_dir(common, Some(&sc));
                let run = run_histogram(&sc, common.seed, *emit_tags)?;
                write_histogram_outputs(&run, &dir)?;
                writeln!(w, "FWHM = {:.2} ps", run.fit.fwhm_ps()).map_err(io)?;
                if let Some((_, f)) = &run.uncompensated {
                    writeln!(w, "FWHM (uncompensated) = {:.2} ps", f.fwhm_ps()).map_err(io)?;
                }
                writeln!(w, "CAR = {:.2}, visibility = {:.4}", run.car.car, run.visibility).map_err(io)?;
                writeln!(w, "wrote {}", dir.display()).map_err(io)?;
            }
            None => {
                if *emit_tags {
                    return Err(CliError::config("--emit-tags needs --scenario"));
                }
                let (a, b) = tag_pair(tags)?;
                let h = correlate(&a, &b, tags.bin_ps, tags.range_ps)?;
                let fit = fit_peak(&h, (tags.range_ps as f64 / 20.0).max(50.0))?;
                let offset = accidental_offset_ps.unwrap_or(tags.range_ps as f64 / 4.0);
                let c = car(&h, fit.center_ps, fit.fwhm_ps(), offset)?;
                let dir = &common.out;
                write_histogram_csv(&h, create(dir, "histogram.csv")?)?;
                writeln!(w, "center = {:.2} ps, FWHM = {:.2} ps", fit.center_ps, fit.fwhm_ps()).map_err(io)?;
                writeln!(w, "CAR = {:.2}", c.car).map_err(io)?;
                writeln!(w, "wrote {}", dir.display()).map_err(io)?;
            }
        },
    }
    Ok(buf)
}

fn tag_pair(t: &TagInput) -> Result<(TimeTagStream, TimeTagStream), CliError> {
    match (&t.tags_a, &t.tags_b) {
        (Some(a), Some(b)) => Ok((read_tags(a)?, read_tags(b)?)),
        _ => Err(CliError::config("need --scenario or both --tags-a and --tags-b")),
    }
}

/// Reads every file; `timestamp,value` files become one series named by
/// their comment header or file stem.
fn load_series(files: &[PathBuf]) -> Result<Vec<TimeSeries>, CliError> {
    let mut out = Vec::new();
    for path in files {
        let ctx = path.display().to_string();
        let open = || File::open(path).map_err(|e| CliError::config(format!("{ctx}: {e}")));
        let header = BufReader::new(open()?)
            .lines()
            .map_while(Result::ok)
            .map(|l| l.trim().to_string())
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .unwrap_or_default();
        if header.replace(' ', "") == "timestamp,value" {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("value");
            out.push(read_series_csv(BufReader::new(open()?), stem).map_err(|e| CliError::from(e).prefixed(&ctx))?);
        } else {
            let table = read_telemetry_csv(open()?).map_err(|e| CliError::from(e).prefixed(&ctx))?;
            out.extend(table.columns);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<Vec<u8>, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("qlan").chain(args.iter().copied()))
            .map_err(|e| CliError::config(e.to_string()))?;
        execute(&cli.command)
    }

    #[test]
    fn bad_block_reference_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        let ideal = include_str!("../scenarios/ideal.toml");
        std::fs::write(&p, ideal.replace("detector_b = \"ideal\"", "detector_b = \"apd\"")).unwrap();
        let e = run(&["chsh", "--scenario", p.to_str().unwrap()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().starts_with("error[config]:"));
        assert!(e.to_string().contains("detector.apd"), "{e}");
    }

    #[test]
    fn perfect_line_correlates_at_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut s = String::from("timestamp,temperature_F,drift_ps\n");
        for k in 0..50 {
            s += &format!("{},{},{}\n", k * 300, 60.0 + k as f64, 2.0 * k as f64 - 3.0);
        }
        std::fs::write(&p, s).unwrap();
        let out = dir.path().join("o");
        run(&["correlate", "--file", p.to_str().unwrap(), "--pair", "temperature,drift", "--out", out.to_str().unwrap()])
            .unwrap();
        let csv = std::fs::read_to_string(out.join("correlation.csv")).unwrap();
        assert!(csv.lines().nth(1).unwrap().contains(",1,") || csv.contains("1.0000"), "{csv}");
    }

    #[test]
    fn missing_column_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "timestamp,temperature_F\n0,1\n300,2\n600,3\n").unwrap();
        let e = run(&["correlate", "--file", p.to_str().unwrap(), "--pair", "temperature,wind"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message.contains("`wind`"), "{e}");
    }

    #[test]
    fn error_lines_stay_single_line() {
        let e = CliError::numeric("a\nb");
        assert_eq!(e.to_string(), "error[numeric]: a b");
        assert_eq!(e.exit_code(), 3);
    }
}
