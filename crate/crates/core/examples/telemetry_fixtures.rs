//! Regenerates the bundled moments-matched telemetry fixtures and prints
//! their correlation tables.
//!
//! ```text
//! cargo run --example telemetry_fixtures -- [out_dir]
//! ```
//!
//! Raw field logs are not distributed; these files carry synthetic series
//! engineered so their sample moments reproduce the published rows.

use std::fs::File;
use std::path::PathBuf;

use qlan::telemetry::{
    moments_matched_series, pearson, render_table, resample_and_align, split_fixture, split_threshold_fit,
    write_telemetry_csv, FixtureSpec, OutlierPolicy, DEFAULT_WINDOW_S,
};

/// 2023-08-01T00:00:00Z, a multiple of the resampling window.
const T0: f64 = 1_690_848_000.0;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("crates/core/data"));
    std::fs::create_dir_all(&dir)?;

    // Buried Griffiss fiber: TOF drift against wind speed, ten days.
    let (wind, tof) = moments_matched_series(
        "wind",
        "m/s",
        "tof_drift",
        "ps",
        1440,
        T0,
        DEFAULT_WINDOW_S,
        3.2,
        1.4,
        FixtureSpec { r: -0.227, mean_y: 0.0, sd_y: 6.5 },
        1,
    )?;
    let griffiss = dir.join("griffiss_tof_wind.csv");
    write_telemetry_csv(&[("wind_mps", &wind), ("tof_drift_ps", &tof)], File::create(&griffiss)?)?;

    // Aerial Stockbridge fiber: asymmetric response about 70.5 °F.
    let (temp, drift) = split_fixture(
        2016,
        T0,
        DEFAULT_WINDOW_S,
        70.5,
        9.0,
        FixtureSpec { r: 0.659, mean_y: 4.0, sd_y: 12.0 },
        FixtureSpec { r: -0.511, mean_y: -5.88, sd_y: 10.0 },
        2,
    )?;
    let stockbridge = dir.join("stockbridge_aerial_temperature.csv");
    write_telemetry_csv(&[("temperature_F", &temp), ("tof_drift_ps", &drift)], File::create(&stockbridge)?)?;

    let g = pearson(&resample_and_align(&wind, &tof, DEFAULT_WINDOW_S, OutlierPolicy::None)?)?;
    let pairs = resample_and_align(&temp, &drift, DEFAULT_WINDOW_S, OutlierPolicy::None)?;
    let s = split_threshold_fit(&pairs, 70.5)?;
    print!("{}", render_table(&[g, s]));
    println!("wrote {} and {}", griffiss.display(), stockbridge.display());
    Ok(())
}
