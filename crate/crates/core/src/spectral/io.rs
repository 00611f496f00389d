//! Plain-text JSA matrix and plot-ready CSV exports.
//!
//! Matrix format: one header line
//! `#jsa v1 n=<n> center_s=<rad/s> center_i=<rad/s> span=<rad/s>`, then `n`
//! lines of `n` space-separated `re,im` pairs (signal index per line).

use num_complex::Complex64;
use std::io::{BufRead, Write};

use super::{marginals, FrequencyGrid, JointSpectralAmplitude, SpectralError};
use crate::units::angular_to_wavelength_nm;

pub fn write_jsa_text<W: Write>(jsa: &JointSpectralAmplitude, mut w: W) -> Result<(), SpectralError> {
    let g = jsa.grid();
    let n = g.n_points();
    writeln!(
        w,
        "#jsa v1 n={n} center_s={:e} center_i={:e} span={:e}",
        g.center_s(),
        g.center_i(),
        g.span()
    )?;
    let values = jsa.values();
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for j in 0..n {
            if j > 0 {
                line.push(' ');
            }
            let v = values[i * n + j];
            line.push_str(&format!("{:e},{:e}", v.re, v.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_jsa_text<R: BufRead>(r: R) -> Result<JointSpectralAmplitude, SpectralError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| SpectralError::Parse("empty file".into()))??;
    let rest = header
        .strip_prefix("#jsa v1")
        .ok_or_else(|| SpectralError::Parse(format!("bad header: {header}")))?;
    let mut n = None;
    let mut cs = None;
    let mut ci = None;
    let mut span = None;
    for field in rest.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| SpectralError::Parse(format!("bad header field: {field}")))?;
        let bad = |_| SpectralError::Parse(format!("bad value for {k}: {v}"));
        match k {
            "n" => n = Some(v.parse::<usize>().map_err(|_| SpectralError::Parse(format!("bad n: {v}")))?),
            "center_s" => cs = Some(v.parse::<f64>().map_err(bad)?),
            "center_i" => ci = Some(v.parse::<f64>().map_err(bad)?),
            "span" => span = Some(v.parse::<f64>().map_err(bad)?),
            _ => {}
        }
    }
    let missing = |k: &str| SpectralError::Parse(format!("header lacks {k}"));
    let grid = FrequencyGrid::new(
        cs.ok_or_else(|| missing("center_s"))?,
        ci.ok_or_else(|| missing("center_i"))?,
        span.ok_or_else(|| missing("span"))?,
        n.ok_or_else(|| missing("n"))?,
    )?;
    let n = grid.n_points();
    let mut values = Vec::with_capacity(n * n);
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for pair in line.split_whitespace() {
            let (re, im) = pair
                .split_once(',')
                .ok_or_else(|| SpectralError::Parse(format!("row {row}: bad pair {pair}")))?;
            let p = |s: &str| s.parse::<f64>().map_err(|_| SpectralError::Parse(format!("row {row}: bad number {s}")));
            values.push(Complex64::new(p(re)?, p(im)?));
        }
        if values.len() - before != n {
            return Err(SpectralError::Parse(format!("row {row}: expected {n} entries, got {}", values.len() - before)));
        }
    }
    if values.len() != n * n {
        return Err(SpectralError::Parse(format!("expected {n} rows, got {}", values.len() / n)));
    }
    JointSpectralAmplitude::from_values(grid, values)
}

/// Long-format JSI: `signal_nm,idler_nm,jsi`, one line per cell.
pub fn write_jsi_csv<W: Write>(jsa: &JointSpectralAmplitude, mut w: W) -> Result<(), SpectralError> {
    let g = jsa.grid();
    let n = g.n_points();
    let jsi = jsa.intensity();
    writeln!(w, "signal_nm,idler_nm,jsi")?;
    for i in 0..n {
        let ls = angular_to_wavelength_nm(g.signal(i));
        for j in 0..n {
            writeln!(w, "{ls:.6},{:.6},{:e}", angular_to_wavelength_nm(g.idler(j)), jsi[i * n + j])?;
        }
    }
    Ok(())
}

/// `index,signal_nm,signal_mass,idler_nm,idler_mass`.
pub fn write_marginals_csv<W: Write>(jsa: &JointSpectralAmplitude, mut w: W) -> Result<(), SpectralError> {
    let g = jsa.grid();
    let m = marginals(jsa);
    writeln!(w, "index,signal_nm,signal_mass,idler_nm,idler_mass")?;
    for k in 0..g.n_points() {
        writeln!(
            w,
            "{k},{:.6},{:e},{:.6},{:e}",
            angular_to_wavelength_nm(g.signal(k)),
            m.signal[k],
            angular_to_wavelength_nm(g.idler(k)),
            m.idler[k]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{compute_jsa, PumpSpectrum, WaveguideDispersion};
    use crate::units::{bandwidth_nm_to_angular, wavelength_nm_to_angular};

    #[test]
    fn text_round_trip_is_exact() {
        let wp = wavelength_nm_to_angular(1550.0);
        let g = FrequencyGrid::centered_on(wp, bandwidth_nm_to_angular(1550.0, 40.0), 16).unwrap();
        let p = PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(1550.0, 5.0)).unwrap();
        let jsa = compute_jsa(&p, &g, &WaveguideDispersion::default()).unwrap();
        let mut buf = Vec::new();
        write_jsa_text(&jsa, &mut buf).unwrap();
        let back = read_jsa_text(buf.as_slice()).unwrap();
        assert_eq!(back.values(), jsa.values());
        assert_eq!(back.grid(), jsa.grid());
    }

    #[test]
    fn short_row_is_rejected() {
        let text = "#jsa v1 n=8 center_s=1e15 center_i=1e15 span=1e13\n1,0 2,0\n";
        assert!(matches!(read_jsa_text(text.as_bytes()), Err(SpectralError::Parse(_))));
    }
}
