//! Telemetry CSV ingestion and emission.
//!
//! Telemetry tables carry a timestamp column (`timestamp_iso8601`, or
//! `timestamp` holding ISO-8601 text or epoch seconds) and any subset of
//! `temperature_F`, `temperature_K`, `wind_mps`, `s1`, `s2`, `s3`, `power`,
//! `sigma_I`, `Cn2`, `r0`. Other numeric columns are accepted, with the
//! unit taken from the suffix after the last underscore. Empty cells are
//! gaps.
//!
//! Single series use `timestamp,value` preceded by an optional comment
//! line such as `# name=tof_drift unit=ps`.

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use std::io::{BufRead, Read, Write};

use super::{TelemetryError, TimeSeries};

fn canonical(header: &str) -> (String, String) {
    let h = header.trim();
    let (name, unit) = match h {
        "temperature_F" => ("temperature", "F"),
        "temperature_K" => ("temperature", "K"),
        "wind_mps" => ("wind", "m/s"),
        "s1" | "s2" | "s3" => (h, ""),
        "power" => ("power", "rel"),
        "sigma_I" | "σ_I" => ("sigma_I", ""),
        "Cn2" | "Cn²" => ("Cn2", "m^-2/3"),
        "r0" | "r₀" => ("r0", "m"),
        _ => match h.rsplit_once('_') {
            Some((n, u)) if !n.is_empty() && !u.is_empty() => return (n.to_string(), u.to_string()),
            _ => (h, ""),
        },
    };
    (name.to_string(), unit.to_string())
}

/// Seconds since the Unix epoch from ISO-8601 text or a bare number.
pub(crate) fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let from = |dt: DateTime<Utc>| dt.timestamp() as f64 + dt.timestamp_subsec_nanos() as f64 * 1e-9;
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(from(dt.with_timezone(&Utc)));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(n) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(from(n.and_utc()));
        }
    }
    None
}

pub(crate) fn format_timestamp(t: f64) -> String {
    let secs = t.floor();
    let nanos = ((t - secs) * 1e9).round() as u32;
    match DateTime::<Utc>::from_timestamp(secs as i64, nanos.min(999_999_999)) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        None => format!("{t}"),
    }
}

/// Columns of one telemetry file as aligned series.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryTable {
    pub columns: Vec<TimeSeries>,
}

impl TelemetryTable {
    pub fn get(&self, name: &str) -> Result<&TimeSeries, TelemetryError> {
        self.columns
            .iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| TelemetryError::MissingColumn(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name()).collect()
    }
}

pub fn read_telemetry_csv<R: Read>(r: R) -> Result<TelemetryTable, TelemetryError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
    let headers = rdr.headers().map_err(|e| TelemetryError::Schema(e.to_string()))?.clone();
    let ts_col = headers
        .iter()
        .position(|h| h == "timestamp_iso8601" || h == "timestamp")
        .ok_or_else(|| TelemetryError::MissingColumn("timestamp_iso8601".into()))?;
    let cols: Vec<(usize, String, String)> = headers
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != ts_col)
        .map(|(k, h)| {
            let (n, u) = canonical(h);
            (k, n, u)
        })
        .collect();
    let mut times = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); cols.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| TelemetryError::Schema(e.to_string()))?;
        let ts = rec.get(ts_col).unwrap_or("");
        let t = parse_timestamp(ts)
            .ok_or_else(|| TelemetryError::Schema(format!("row {}: bad timestamp `{ts}`", line + 2)))?;
        times.push(t);
        for (slot, (k, name, _)) in cols.iter().enumerate() {
            let cell = rec.get(*k).unwrap_or("");
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>()
                    .map_err(|_| TelemetryError::Schema(format!("row {}: column {name}: bad number `{cell}`", line + 2)))?
            };
            values[slot].push(v);
        }
    }
    let columns = cols
        .into_iter()
        .zip(values)
        .map(|((_, n, u), v)| TimeSeries::new(n, u, times.clone(), v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TelemetryTable { columns })
}

/// Writes series sharing one time base as a telemetry CSV.
pub fn write_telemetry_csv<W: Write>(columns: &[(&str, &TimeSeries)], mut w: W) -> Result<(), TelemetryError> {
    let Some((_, first)) = columns.first() else {
        return Err(TelemetryError::Schema("no columns".into()));
    };
    if columns.iter().any(|(_, s)| s.times() != first.times()) {
        return Err(TelemetryError::Misaligned);
    }
    let header: Vec<&str> = std::iter::once("timestamp_iso8601").chain(columns.iter().map(|(h, _)| *h)).collect();
    writeln!(w, "{}", header.join(","))?;
    for (k, &t) in first.times().iter().enumerate() {
        let mut line = format_timestamp(t);
        for (_, s) in columns {
            line.push(',');
            let v = s.values()[k];
            if !v.is_nan() {
                line.push_str(&format!("{v}"));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_series_csv<R: BufRead>(r: R, default_name: &str) -> Result<TimeSeries, TelemetryError> {
    let mut name = default_name.to_string();
    let mut unit = String::new();
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut seen_header = false;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let l = line.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(meta) = l.strip_prefix('#') {
            for field in meta.split_whitespace() {
                match field.split_once('=') {
                    Some(("unit", u)) => unit = u.to_string(),
                    Some(("name", n)) => name = n.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        if !seen_header {
            seen_header = true;
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            if cols.len() != 2 || cols[0] != "timestamp" || cols[1] != "value" {
                return Err(TelemetryError::Schema(format!("line {}: expected header `timestamp,value`", k + 1)));
            }
            continue;
        }
        let (a, b) = l
            .split_once(',')
            .ok_or_else(|| TelemetryError::Schema(format!("line {}: expected two fields", k + 1)))?;
        times.push(parse_timestamp(a).ok_or_else(|| TelemetryError::Schema(format!("line {}: bad timestamp", k + 1)))?);
        let b = b.trim();
        values.push(if b.is_empty() {
            f64::NAN
        } else {
            b.parse().map_err(|_| TelemetryError::Schema(format!("line {}: bad value `{b}`", k + 1)))?
        });
    }
    if !seen_header {
        return Err(TelemetryError::MissingColumn("value".into()));
    }
    TimeSeries::new(name, unit, times, values)
}

pub fn write_series_csv<W: Write>(s: &TimeSeries, mut w: W) -> Result<(), TelemetryError> {
    writeln!(w, "# name={} unit={}", s.name(), s.unit())?;
    writeln!(w, "timestamp,value")?;
    for (t, v) in s.times().iter().zip(s.values()) {
        if v.is_nan() {
            writeln!(w, "{},", format_timestamp(*t))?;
        } else {
            writeln!(w, "{},{v}", format_timestamp(*t))?;
        }
    }
    Ok(())
}
