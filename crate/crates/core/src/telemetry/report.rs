use std::io::Write;

use super::{CorrelationReport, TelemetryError};

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

/// Aligned text table: pair, n, r, R², strength, line, then the split
/// columns (threshold, below r/R², above r/R²) when present.
pub fn render_table(reports: &[CorrelationReport]) -> String {
    let header = [
        "pair", "n", "r", "R2", "strength", "fit", "threshold", "below r", "below R2", "above r", "above R2",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let s = r.split.as_ref();
            vec![
                r.pair.clone(),
                r.fit.n.to_string(),
                format!("{:.3}", r.fit.r),
                format!("{:.3}", r.fit.r_squared),
                r.strength.label().to_string(),
                r.equation(),
                s.map(|s| format!("{}", s.threshold)).unwrap_or_else(|| "-".into()),
                cell(s.map(|s| s.below.r)),
                cell(s.map(|s| s.below.r_squared)),
                cell(s.map(|s| s.above.r)),
                cell(s.map(|s| s.above.r_squared)),
            ]
        })
        .collect();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let fmt_row = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = fmt_row(header.iter().map(|h| h.to_string()).collect());
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out
}

/// Machine-readable form of [`render_table`] with full precision.
pub fn write_report_csv<W: Write>(reports: &[CorrelationReport], mut w: W) -> Result<(), TelemetryError> {
    writeln!(
        w,
        "pair,n,r,r_squared,strength,slope,intercept,x_unit,y_unit,threshold,below_n,below_r,below_r_squared,below_slope,below_intercept,above_n,above_r,above_r_squared,above_slope,above_intercept"
    )?;
    for r in reports {
        let f = &r.fit;
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            r.pair,
            f.n,
            f.r,
            f.r_squared,
            r.strength.label(),
            f.slope,
            f.intercept,
            r.x_unit,
            r.y_unit
        );
        match &r.split {
            Some(s) => {
                for part in [
                    format!("{}", s.threshold),
                    format!("{}", s.below.n),
                    format!("{}", s.below.r),
                    format!("{}", s.below.r_squared),
                    format!("{}", s.below.slope),
                    format!("{}", s.below.intercept),
                    format!("{}", s.above.n),
                    format!("{}", s.above.r),
                    format!("{}", s.above.r_squared),
                    format!("{}", s.above.slope),
                    format!("{}", s.above.intercept),
                ] {
                    line.push(',');
                    line.push_str(&part);
                }
            }
            None => line.push_str(&",".repeat(11)),
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{pearson, AlignedPairs};

    #[test]
    fn table_has_one_row_per_report() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let rep = pearson(&AlignedPairs::from_vectors(x.clone(), x.iter().map(|v| 3.0 - v).collect())).unwrap();
        let t = render_table(&[rep.clone(), rep.clone()]);
        assert_eq!(t.lines().count(), 4);
        assert!(t.contains("-1.000"));
        let mut buf = Vec::new();
        write_report_csv(&[rep], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 20);
    }
}
