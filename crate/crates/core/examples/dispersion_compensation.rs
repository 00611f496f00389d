//! Chromatic dispersion on the idler arm smears the coincidence peak; a
//! matched compensator restores it. Scans the compensator D to locate the
//! fiber's own dispersion.
//!
//! ```text
//! cargo run --release --example dispersion_compensation -- [length_km]
//! ```

use std::path::Path;

use qlan::franson::{apply_filters, time_domain_coincidences};
use qlan::link::{apply_compensation, apply_dispersion, FiberLink, D_EXPERIMENT};
use qlan::scenario::Scenario;
use qlan::spectral::{Axis, JointSpectralAmplitude};
use qlan::units::angular_to_wavelength_nm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let km: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4.88);
    let sc = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dispersion-demo.toml"))?;
    let jsa = sc.build_jsa()?;
    let (fa, fb) = sc.build_filters(jsa.grid())?;
    let filtered = apply_filters(&jsa, &fa, &fb)?;
    let w = sc.wiring()?;
    let sigma_s = w.det_a.jitter_ps.hypot(w.det_b.jitter_ps) * 1e-12;
    let lambda0 = angular_to_wavelength_nm(jsa.grid().center_i());

    let fwhm_ps = |j: &JointSpectralAmplitude| -> f64 {
        time_domain_coincidences(j).with_gaussian_jitter(sigma_s).fwhm().map_or(f64::NAN, |w| w * 1e12)
    };
    let fiber = FiberLink::new(km, 0.2, D_EXPERIMENT, lambda0, vec![])?;
    let dispersed = apply_dispersion(&filtered, &fiber, Axis::Idler)?;
    println!("{km} km of D = {D_EXPERIMENT} fiber at {lambda0:.2} nm");
    println!("  back-to-back FWHM {:.1} ps, after fiber {:.1} ps", fwhm_ps(&filtered), fwhm_ps(&dispersed));

    println!("\n{:>12} {:>10}", "D_comp", "FWHM (ps)");
    for k in 0..=15 {
        let d = 6.0 + 0.4 * k as f64;
        println!("{d:>12.1} {:>10.1}", fwhm_ps(&apply_compensation(&dispersed, d, km, lambda0, Axis::Idler)?));
    }
    Ok(())
}
