use qlan::scenario::{run_tof, Scenario};
use qlan::timetag::{
    apply_clock, correlate, correlate_chunked, fit_gaussian, generate_events, ClockModel, DelayModel, DetectorModel,
    PairSource,
};

fn perfect() -> DetectorModel {
    DetectorModel { efficiency: 1.0, dark_rate: 0.0, jitter_ps: 0.0, dead_time_ps: 0.0 }
}

#[test]
fn two_taggers_widen_the_peak_by_root_two() {
    let src = PairSource::new(1e5, (1.0, 1.0), DelayModel::gaussian(0.0));
    let (a, b) = generate_events(&src, &perfect(), &perfect(), 0, 1.0, 3).unwrap();
    assert!(a.len() >= 90_000);
    let clock = ClockModel { jitter_ps: 20.0, ..ClockModel::identity() };

    let one = correlate(&a, &apply_clock(&b, &clock, 1), 1, 400).unwrap();
    let two = correlate(&apply_clock(&a, &clock, 2), &apply_clock(&b, &clock, 1), 1, 400).unwrap();
    let (w1, w2) = (fit_gaussian(&one).unwrap().sigma_ps(), fit_gaussian(&two).unwrap().sigma_ps());
    assert!((w1 / 20.0 - 1.0).abs() < 0.05, "single-tagger sigma {w1}");
    let ratio = w2 / w1;
    assert!((ratio / std::f64::consts::SQRT_2 - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn chunk_boundaries_never_change_counts() {
    let det = DetectorModel { efficiency: 0.5, dark_rate: 5e4, jitter_ps: 30.0, dead_time_ps: 20_000.0 };
    let src = PairSource::new(2e5, (0.3, 0.3), DelayModel::gaussian(25.0));
    let (a, b) = generate_events(&src, &det, &det, 0, 0.5, 21).unwrap();
    let whole = correlate(&a, &b, 8, 5000).unwrap();
    for cuts in [vec![], vec![250_000_000_000], (1..200).map(|k| k * 2_500_000_000 - 1).collect::<Vec<i64>>()] {
        assert_eq!(correlate_chunked(&a, &b, 8, 5000, &cuts).unwrap().counts(), whole.counts());
    }
}

#[test]
fn dark_counts_alone_give_a_flat_floor() {
    let det = DetectorModel { dark_rate: 1e5, ..perfect() };
    let src = PairSource::new(0.0, (1.0, 1.0), DelayModel::gaussian(0.0));
    let (a, b) = generate_events(&src, &det, &det, 0, 20.0, 8).unwrap();
    let h = correlate(&a, &b, 200, 40_000).unwrap();
    let expected = a.len() as f64 * b.len() as f64 / 20.0 * 200e-12;
    let n = h.counts().len() as f64;
    let mean = h.total() as f64 / n;
    assert!((mean - expected).abs() < 5.0 * (expected / n).sqrt(), "{mean} vs {expected}");
    let max = *h.counts().iter().max().unwrap() as f64;
    assert!(max < expected + 6.0 * expected.sqrt());
}

#[test]
fn five_day_disciplined_run_stays_under_a_nanosecond() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/wr-5day.toml");
    let tof = run_tof(&Scenario::load(&path).unwrap(), None).unwrap();
    assert_eq!(tof.records.len(), 121);
    assert!(tof.records.iter().all(|r| r.error.is_none()));
    assert!(tof.max_abs_drift_ps < 1000.0, "{}", tof.max_abs_drift_ps);
    // Bounded discipline: no secular trend survives.
    assert!(tof.slope_ps_per_hr.abs() < 5.0, "{}", tof.slope_ps_per_hr);
}
