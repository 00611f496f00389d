//! Five simulated days of two nodes on separate, disciplined clocks: the
//! coincidence peak is located every hour and its excursion tracked.
//!
//! ```text
//! cargo run --release --example clock_drift_tracking
//! ```

use std::path::Path;

use qlan::scenario::{run_tof, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/wr-5day.toml"))?;
    let run = run_tof(&sc, None)?;

    for r in run.records.iter().step_by(12) {
        match (r.delta_ps, &r.error) {
            (Some(d), _) => println!("t = {:>6.1} h  Δτ = {d:+8.1} ps", r.timestamp_s / 3600.0),
            (None, e) => println!("t = {:>6.1} h  no fit ({e:?})", r.timestamp_s / 3600.0),
        }
    }
    println!("\nmax |Δτ| {:.1} ps over {} epochs, trend {:+.3} ps/hr", run.max_abs_drift_ps, run.records.len(), run.slope_ps_per_hr);
    Ok(())
}
