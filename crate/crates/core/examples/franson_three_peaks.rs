//! Franson interference in the time domain: two unbalanced analyzers turn
//! one coincidence peak into three, and only the central one depends on
//! the analyzer phases.
//!
//! ```text
//! cargo run --release --example franson_three_peaks
//! ```

use std::path::Path;

use qlan::franson::{apply_filters, postselect_central_peak, time_domain_coincidences};
use qlan::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/ideal.toml"))?;
    let jsa = sc.build_jsa()?;
    let (fa, fb) = sc.build_filters(jsa.grid())?;

    let dist = time_domain_coincidences(&apply_filters(&jsa, &fa, &fb)?);
    let total = dist.total();
    for p in dist.peaks().iter().filter(|p| p.weight > 0.01 * total) {
        println!("peak at {:+7.1} ps carries {:.3} of the mass", p.position_s * 1e12, p.weight / total);
    }

    println!("\n{:>10} {:>14}", "φ_A (deg)", "central mass");
    for deg in (0..=360).step_by(30) {
        let f = fa.clone().with_phase((deg as f64).to_radians());
        let d = time_domain_coincidences(&apply_filters(&jsa, &f, &fb)?);
        println!("{deg:>10} {:>14.4}", postselect_central_peak(&d, 20e-12)? / total);
    }
    Ok(())
}
