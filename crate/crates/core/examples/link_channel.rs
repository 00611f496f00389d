//! Per-link channel monitors: loss budget, thermal time-of-flight drift,
//! polarization drift with automatic compensation, and turbulence grading
//! for a free-space hop.
//!
//! ```text
//! cargo run --release --example link_channel
//! ```

use qlan::link::{
    classify_turbulence, compensation_events, fidelity_trace, scintillation_index, tof_drift_series, FiberLink,
    SopDriftModel, StokesSample, TurbulenceSample, COMPENSATION_THRESHOLD, D_SMF28, TOF_BURIED,
};
use qlan::telemetry::TimeSeries;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let link = FiberLink::new(5.0, 0.25, D_SMF28, 1550.0, vec![0.5, 0.5])?;
    println!("5 km link: {:.2} dB, transmission {:.3}", link.total_loss_db(), link.transmission());

    // A day of ground temperature at 10 min resolution.
    let times: Vec<f64> = (0..144).map(|k| 600.0 * k as f64).collect();
    let temps: Vec<f64> = times.iter().map(|t| 288.0 + 3.0 * (t / 86_400.0 * std::f64::consts::TAU).sin()).collect();
    let tof = tof_drift_series(&TimeSeries::new("ground", "K", times.clone(), temps.clone())?, TOF_BURIED, 5.0)?;
    let (lo, hi) = tof.values().iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    println!("thermal TOF swing over the day: {lo:+.1} to {hi:+.1} ps");

    let wind: Vec<f64> = times.iter().map(|t| 2.0 + 4.0 * (t / 43_200.0).fract()).collect();
    let model = SopDriftModel { base_step: 0.02, temp_coeff: 0.3, wind_coeff: 0.01 };
    let sop = model.simulate([1.0, 0.0, 0.0], &times, &temps, &wind, 3)?;
    let reference = StokesSample::new(0.0, [1.0, 0.0, 0.0], 1.0)?;
    let worst = fidelity_trace(&sop, &reference)?.into_iter().fold(1.0, f64::min);
    let events = compensation_events(&sop, COMPENSATION_THRESHOLD)?;
    println!("SOP: worst fidelity without control {worst:.3}, {} compensation triggers at F < {COMPENSATION_THRESHOLD}", events.len());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lognormal = LogNormal::new(0.0, 0.35)?;
    let intensity: Vec<f64> = (0..5000).map(|_| lognormal.sample(&mut rng)).collect();
    let si = scintillation_index(&intensity)?;
    let report = classify_turbulence(&TurbulenceSample::new(si, 3e-15, 0.05, 3.0)?);
    println!("free-space hop: σ_I² = {si:.3}, graded {} (scintillation {}, Cn² {}, r₀ {})",
        report.composite.label(), report.scintillation.label(), report.cn2.label(), report.fried.label());
    Ok(())
}
