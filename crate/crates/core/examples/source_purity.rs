//! Spectral purity and Schmidt number of a waveguide source as the
//! waveguide grows, for a CW and a 3 nm pulsed pump.
//!
//! ```text
//! cargo run --release --example source_purity
//! ```

use qlan::spectral::{
    compute_jsa, marginals, schmidt_coefficients, spectral_purity, FrequencyGrid, PumpSpectrum, WaveguideDispersion,
};
use qlan::units::{bandwidth_nm_to_angular, wavelength_nm_to_angular};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wp = wavelength_nm_to_angular(1550.0);
    let grid = FrequencyGrid::centered_on(wp, bandwidth_nm_to_angular(1550.0, 30.0), 128)?;
    let pulsed = PumpSpectrum::gaussian(wp, bandwidth_nm_to_angular(1550.0, 3.0))?;

    println!("{:>8} {:>10} {:>10} {:>10}", "L (cm)", "purity", "K", "λ₁");
    for cm in [5.0, 7.5, 10.0, 12.5, 15.0] {
        let jsa = compute_jsa(&pulsed, &grid, &WaveguideDispersion::default().with_length(cm * 1e-2))?;
        let gamma = spectral_purity(&jsa)?;
        let lambdas = schmidt_coefficients(&jsa)?;
        println!("{cm:>8.1} {gamma:>10.4} {:>10.2} {:>10.4}", 1.0 / gamma, lambdas[0]);
    }

    // A CW pump locks ω_s + ω_i: the state is far from separable.
    let cw = compute_jsa(&PumpSpectrum::cw(wp)?, &grid, &WaveguideDispersion::default())?;
    let m = marginals(&cw);
    let occupied = m.signal.iter().filter(|&&p| p > 1e-3 * m.signal.iter().cloned().fold(0.0, f64::max)).count();
    println!("\ncw pump: purity {:.4}, signal band spans {occupied} of {} bins", spectral_purity(&cw)?, m.signal.len());
    Ok(())
}
