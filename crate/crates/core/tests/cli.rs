//! End-to-end runs of the `levyfd` binary: exit codes and output artifacts.

use std::path::Path;
use std::process::Command;

const FAST: &str = r#"
name = "fast"

[space]
spacings = [4, 8, 16]
snapshots = [1.0]

[time]
spacing = 32
steps = [8, 16, 32]

[checks]
samples = 10
spacings = [8]
collapse_samples = 8
collapse_spacings = [4, 8]
theta_max_k = 16
consistency_spacings = [8, 16, 32]
blowup_spacings = [8, 16]
"#;

fn run(args: &[&str], config: &str, dir: &Path) -> (i32, String) {
    let cfg = dir.join("study.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_levyfd"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn check_operators_passes_and_reports_every_property() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["check-operators", "--seed", "3"], FAST, dir.path());
    assert_eq!(code, 0, "{text}");
    let r = report(dir.path());
    assert_eq!(r["passed"], true);
    assert_eq!(r["properties"].as_array().unwrap().len(), 5);
    assert_eq!(r["config"]["seed"], 3);
}

#[test]
fn operator_checks_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&["check-operators", "--workers", "1"], FAST, a.path());
    run(&["check-operators", "--workers", "2"], FAST, b.path());
    let worst = |r: serde_json::Value| -> Vec<serde_json::Value> {
        r["properties"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["worst"].clone())
            .collect()
    };
    assert_eq!(worst(report(a.path())), worst(report(b.path())));
}

#[test]
fn time_study_writes_errors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["converge-time"], FAST, dir.path());
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.path().join("out/errors.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,h,tau,sup_err,l2_err"));
    assert_eq!(lines.count(), 3);
    assert_eq!(report(dir.path())["kind"], "time");
}

#[test]
fn unmet_threshold_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{FAST}\n[thresholds]\ntime_slope = 5.0\n");
    let (code, text) = run(&["converge-time"], &cfg, dir.path());
    assert_eq!(code, 1, "{text}");
    assert_eq!(report(dir.path())["passed"], false);
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["converge-space"], "[problem]\nhorizon = -1.0\n", dir.path());
    assert_eq!(code, 2);
}

#[test]
fn solve_writes_both_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["solve", "--n", "8", "--steps", "4"], FAST, dir.path());
    assert_eq!(code, 0, "{text}");
    for scheme in ["semidiscrete", "implicit-euler"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("out/trajectory_{scheme}.csv"))).unwrap();
        assert!(csv.starts_with("t,x,value"));
        assert!(csv.lines().count() > 1);
    }
}

#[test]
fn dump_matrix_is_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["dump-matrix", "--n", "4", "--time", "0.25"], FAST, dir.path());
    assert_eq!(code, 0, "{text}");
    let mtx = std::fs::read_to_string(dir.path().join("out/matrix.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket"), "{}", &mtx[..mtx.len().min(80)]);
}
