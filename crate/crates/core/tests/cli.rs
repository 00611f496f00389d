use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qlan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlan")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml")).display().to_string()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn short_histogram(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(scenario("bright-source")).unwrap().replace("integration_s = 5.0", "integration_s = 0.2");
    let p = dir.join("short.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn chsh_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = qlan(&["chsh", "--scenario", &scenario("ideal"), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert!(fa.iter().any(|f| f.0 == "report.txt"));
    assert!(fa.iter().filter(|f| f.0.starts_with("fringe_")).count() >= 4);
    assert_eq!(fa, fb);
}

#[test]
fn histogram_reruns_are_byte_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short_histogram(dir.path());
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["histogram", "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = qlan(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_dir_sorted(&out)
    };
    let first = run("a", &[]);
    assert_eq!(first, run("b", &[]));
    assert_ne!(first, run("c", &["--seed", "15"]));
}

#[test]
fn emitted_tags_feed_histogram_and_tof() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short_histogram(dir.path());
    let sim = dir.path().join("sim");
    let o = qlan(&["histogram", "--scenario", sc.to_str().unwrap(), "--emit-tags", "--out", sim.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (ta, tb) = (sim.join("tags_a.ttx"), sim.join("tags_b.ttx"));
    assert!(ta.exists() && tb.exists());

    let re = dir.path().join("re");
    let o = qlan(&[
        "histogram",
        "--tags-a",
        ta.to_str().unwrap(),
        "--tags-b",
        tb.to_str().unwrap(),
        "--accidental-offset-ps",
        "500",
        "--out",
        re.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(sim.join("histogram.csv")).unwrap(), std::fs::read(re.join("histogram.csv")).unwrap());

    let tof = dir.path().join("tof");
    let o = qlan(&[
        "tof",
        "--tags-a",
        ta.to_str().unwrap(),
        "--tags-b",
        tb.to_str().unwrap(),
        "--epoch-s",
        "0.05",
        "--out",
        tof.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let drift = std::fs::read_to_string(tof.join("drift.csv")).unwrap();
    assert_eq!(drift.lines().next().unwrap(), "timestamp_s,center_ps,delta_ps,status");
    assert_eq!(drift.lines().count(), 5, "{drift}");
}

#[test]
fn source_writes_purity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = qlan(&["source", "--scenario", &scenario("source-3nm-15cm"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["jsi.csv", "marginals.csv", "jsa.txt", "purity.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn correlate_reads_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/stockbridge_aerial_temperature.csv");
    let o = qlan(&[
        "correlate",
        "--file",
        data.to_str().unwrap(),
        "--pair",
        "temperature,tof_drift",
        "--threshold",
        "70.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("0.659"), "{stdout}");
    assert!(dir.path().join("correlation.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[setup]\ndetector_a = \"nowhere\"\ndetector_b = \"nowhere\"\n").unwrap();
    let unseeded = dir.path().join("unseeded.toml");
    let text = std::fs::read_to_string(scenario("bright-source")).unwrap().replace("seed = 14\n", "");
    std::fs::write(&unseeded, text).unwrap();
    let missing = dir.path().join("missing.toml");

    for args in [
        vec!["chsh", "--scenario", bad.to_str().unwrap()],
        vec!["histogram", "--scenario", unseeded.to_str().unwrap()],
        vec!["source", "--scenario", missing.to_str().unwrap()],
        vec!["histogram", "--tags-a", "x.ttx"],
        vec!["frobnicate"],
    ] {
        let o = qlan(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    std::fs::write(dir.path().join("empty.ttx"), "").unwrap();
    let empty = dir.path().join("empty.ttx");
    let o = qlan(&["histogram", "--tags-a", empty.to_str().unwrap(), "--tags-b", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = qlan(&["chsh", "--scenario", bad.to_str().unwrap()]);
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.starts_with("error[config]:"), "{stderr}");
    assert_eq!(stderr.trim_end().lines().count(), 1);
}

#[test]
fn tags_without_coincidences_are_numeric_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ttx"), dir.path().join("b.ttx"));
    std::fs::write(&a, "#ttx-tags v1 channel=1 unit=ps\n1000\n").unwrap();
    std::fs::write(&b, "#ttx-tags v1 channel=2 unit=ps\n900000000\n").unwrap();
    let o = qlan(&[
        "histogram",
        "--tags-a",
        a.to_str().unwrap(),
        "--tags-b",
        b.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[numeric]:"));
}
