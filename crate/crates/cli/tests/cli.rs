use std::path::Path;
use std::process::{Command, Output};

fn cislunar(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cislunar"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("CISLUNAR_RUN_DIR")
        .output()
        .expect("binary runs")
}

#[test]
fn propagate_writes_tracks_and_flyby() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cislunar(tmp.path(), &["propagate", "--until", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("propagate");
    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t_days,x_km,y_km,z_km"));
    assert_eq!(csv.lines().count(), 1 + 241);
    let events = std::fs::read_to_string(dir.join("events.csv")).unwrap();
    assert_eq!(events.lines().filter(|l| l.contains("periapsis_Moon")).count(), 1);
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.contains("flyby_altitude_km"));
    assert!(dir.join("scenario.txt").exists());
}

#[test]
fn plan_table_decreases_with_eccentricity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cislunar(tmp.path(), &["plan", "--ecc", "0", "--ecc", "0.4", "--ecc", "0.8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let dv: Vec<f64> = text
        .lines()
        .skip(3)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(dv.len(), 3);
    assert!(dv[0] > dv[1] && dv[1] > dv[2], "{dv:?}");
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cislunar(tmp.path(), &["propagate", "--bogus"]).status.code(), Some(2));
    assert_eq!(cislunar(tmp.path(), &["launch"]).status.code(), Some(2));

    let scenario = tmp.path().join("bad.txt");
    std::fs::write(&scenario, "spacecraft.thrust_n = 1.2\n").unwrap();
    let out = cislunar(tmp.path(), &["--scenario", scenario.to_str().unwrap(), "propagate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt"));

    let missing = tmp.path().join("missing.txt");
    let out = cislunar(tmp.path(), &["--scenario", missing.to_str().unwrap(), "plan"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&scenario, "phases.passes = 0\n").unwrap();
    let out = cislunar(tmp.path(), &["--scenario", scenario.to_str().unwrap(), "propagate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_is_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("short.txt");
    std::fs::write(&scenario, "# one day\nphases.detumble_h = 3\n").unwrap();
    let out = cislunar(
        tmp.path(),
        &["--scenario", scenario.to_str().unwrap(), "propagate", "--until", "1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = std::fs::read_to_string(tmp.path().join("propagate/scenario.txt")).unwrap();
    assert!(
        echo.lines().any(|l| l.replace(' ', "") == "phases.detumble_h=3"),
        "{echo}"
    );
}

#[test]
fn ephemeris_export() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cislunar(tmp.path(), &["export-ephemeris", "--years", "0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("export-ephemeris/ephemeris.txt").exists());
    assert_eq!(
        cislunar(tmp.path(), &["export-ephemeris", "--years=-1"]).status.code(),
        Some(2)
    );
}
