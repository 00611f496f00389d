use std::path::PathBuf;

use qlan::scenario::Scenario;
use qlan::telemetry::{pearson, read_telemetry_csv, resample_and_align, split_threshold_fit, OutlierPolicy, DEFAULT_WINDOW_S};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn every_bundled_scenario_parses_and_resolves() {
    let mut n = 0;
    for entry in std::fs::read_dir(root().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let sc = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stem = path.file_stem().unwrap().to_str().unwrap();
        assert_eq!(sc.name(), stem);
        if stem.starts_with("source-") {
            sc.build_jsa().unwrap_or_else(|e| panic!("{stem}: {e}"));
        } else {
            sc.seed(None).unwrap_or_else(|e| panic!("{stem}: {e}"));
            sc.wiring().unwrap_or_else(|e| panic!("{stem}: {e}"));
        }
        n += 1;
    }
    assert!(n >= 9);
}

#[test]
fn chsh_scenarios_build_setups() {
    for name in ["ideal", "indoor", "stockbridge-5km", "stockbridge-5km-two-clock"] {
        let sc = Scenario::load(&root().join(format!("scenarios/{name}.toml"))).unwrap();
        sc.chsh_setup(None).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn fixture_files_carry_published_moments() {
    let open = |f: &str| read_telemetry_csv(std::fs::File::open(root().join("data").join(f)).unwrap()).unwrap();

    let g = open("griffiss_tof_wind.csv");
    let p = resample_and_align(g.get("wind").unwrap(), g.get("tof_drift").unwrap(), DEFAULT_WINDOW_S, OutlierPolicy::None)
        .unwrap();
    assert_eq!(p.len(), 1440);
    assert!((pearson(&p).unwrap().r() + 0.227).abs() < 1e-3);

    let s = open("stockbridge_aerial_temperature.csv");
    let p = resample_and_align(
        s.get("temperature").unwrap(),
        s.get("tof_drift").unwrap(),
        DEFAULT_WINDOW_S,
        OutlierPolicy::None,
    )
    .unwrap();
    let split = split_threshold_fit(&p, 70.5).unwrap().split.unwrap();
    assert!((split.below.r - 0.659).abs() < 1e-3);
    assert!((split.above.r + 0.511).abs() < 1e-3);
    assert!((split.above.r_squared - split.above.r * split.above.r).abs() < 1e-12);
}
