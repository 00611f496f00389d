use std::path::Path;

use qlan::franson::{apply_filters, time_domain_coincidences};
use qlan::link::{apply_compensation, apply_dispersion, FiberLink, D_EXPERIMENT};
use qlan::scenario::Scenario;
use qlan::spectral::{Axis, JointSpectralAmplitude};
use qlan::units::angular_to_wavelength_nm;

fn demo() -> (JointSpectralAmplitude, f64, f64) {
    let sc = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dispersion-demo.toml")).unwrap();
    let jsa = sc.build_jsa().unwrap();
    let (fa, fb) = sc.build_filters(jsa.grid()).unwrap();
    let w = sc.wiring().unwrap();
    let lambda0 = angular_to_wavelength_nm(jsa.grid().center_i());
    (apply_filters(&jsa, &fa, &fb).unwrap(), w.det_a.jitter_ps.hypot(w.det_b.jitter_ps) * 1e-12, lambda0)
}

fn fwhm_ps(j: &JointSpectralAmplitude, sigma_s: f64) -> f64 {
    time_domain_coincidences(j).with_gaussian_jitter(sigma_s).fwhm().unwrap() * 1e12
}

#[test]
fn wrong_sign_compensation_doubles_the_spread() {
    let (jsa, sigma, lambda0) = demo();
    let fiber = FiberLink::new(4.88, 0.2, D_EXPERIMENT, lambda0, vec![]).unwrap();
    let once = apply_dispersion(&jsa, &fiber, Axis::Idler).unwrap();
    let twice = apply_compensation(&once, -D_EXPERIMENT, 4.88, lambda0, Axis::Idler).unwrap();
    let (bare, w1, w2) = (fwhm_ps(&jsa, sigma), fwhm_ps(&once, sigma), fwhm_ps(&twice, sigma));
    assert!(w2 > 1.8 * (w1 - bare) + bare, "{bare} {w1} {w2}");
}

#[test]
fn compensation_undoes_dispersion_exactly_in_amplitude() {
    let (jsa, _, lambda0) = demo();
    let fiber = FiberLink::new(5.0, 0.2, D_EXPERIMENT, lambda0, vec![]).unwrap();
    let back = apply_compensation(
        &apply_dispersion(&jsa, &fiber, Axis::Idler).unwrap(),
        D_EXPERIMENT,
        5.0,
        lambda0,
        Axis::Idler,
    )
    .unwrap();
    let dev = jsa.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(dev < 1e-9, "{dev}");
}

#[test]
fn dispersion_is_lossless() {
    let (jsa, _, lambda0) = demo();
    let fiber = FiberLink::new(20.0, 0.2, 17.0, lambda0, vec![]).unwrap();
    let d = apply_dispersion(&jsa, &fiber, Axis::Signal).unwrap();
    assert!((d.norm() - jsa.norm()).abs() < 1e-12 * jsa.norm());
}
