//! Runs a bundled CHSH scenario and prints the fringe fits and S.
//!
//! ```text
//! cargo run --release --example chsh_scenario -- [ideal|indoor|stockbridge-5km|stockbridge-5km-two-clock]
//! ```

use std::path::Path;

use qlan::chsh::run_chsh;
use qlan::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ideal".into());
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    let report = run_chsh(&Scenario::load(&path)?.chsh_setup(None)?)?;

    println!("{name}: {:?} mode, {} tagger(s), timing σ {:.1} ps", report.mode, if report.two_tagger { 2 } else { 1 }, report.timing_sigma_ps);
    for sw in &report.sweeps {
        let n: f64 = sw.points.iter().map(|p| p.counts).sum();
        println!(
            "  α = {:>5.1}°: V_raw = {:.4}, V_corr = {:.4}, {n:.0} counts, window at {:+.1} ps",
            sw.alpha_deg, sw.fit_raw.visibility, sw.fit_corrected.visibility, sw.window_center_ps
        );
    }
    let c = &report.corrected;
    println!("S = {:.4} ± {:.4} ({:.1} σ above 2)", c.s, c.sigma_s, c.significance);
    println!("S without accidental subtraction = {:.4} ± {:.4}", report.uncorrected.s, report.uncorrected.sigma_s);
    if let Some(v) = c.mean_visibility {
        println!("2√2·V̄ = {:.4}", qlan::chsh::s_from_visibility(v));
    }
    Ok(())
}
