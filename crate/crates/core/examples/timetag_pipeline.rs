//! Time-tag pipeline end to end: simulate two detector streams, build the
//! start-stop histogram, fit the peak, and estimate CAR.
//!
//! ```text
//! cargo run --release --example timetag_pipeline -- [out_dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use qlan::timetag::{
    car, correlate, fit_gaussian_in_window, generate_events, write_histogram_csv, write_tag_file, DelayModel,
    DetectorModel, PairSource,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/timetag_pipeline"));
    std::fs::create_dir_all(&dir)?;

    let snspd = DetectorModel { efficiency: 0.85, dark_rate: 3e5, jitter_ps: 15.0, dead_time_ps: 40_000.0 };
    let source = PairSource::new(5e5, (0.3, 0.25), DelayModel::Gaussian { mean_ps: 120.0, sigma_ps: 5.0 });
    let (a, b) = generate_events(&source, &snspd, &snspd, 0, 1.0, 7)?;
    println!("singles: A {} Hz, B {} Hz", a.len(), b.len());

    let h = correlate(&a, &b, 4, 4000)?;
    let peak = h.delays_ps()[h.counts().iter().enumerate().max_by_key(|c| c.1).unwrap().0];
    let fit = fit_gaussian_in_window(&h, peak, 100.0)?;
    println!("peak at {:.1} ps, FWHM {:.1} ps", fit.center_ps, fit.fwhm_ps());

    let c = car(&h, fit.center_ps, fit.fwhm_ps(), 1000.0)?;
    println!(
        "CAR {:.1}: {:.0} counts in the window, {:.1} accidental (mean of {} windows)",
        c.car, c.signal_counts, c.accidental_counts, c.accidental_windows
    );

    write_histogram_csv(&h, BufWriter::new(File::create(dir.join("histogram.csv"))?))?;
    write_tag_file(&a, BufWriter::new(File::create(dir.join("tags_a.ttx"))?))?;
    write_tag_file(&b, BufWriter::new(File::create(dir.join("tags_b.ttx"))?))?;
    println!("wrote {}", dir.display());
    Ok(())
}
