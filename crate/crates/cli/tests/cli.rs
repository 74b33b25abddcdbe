use std::path::Path;
use std::process::Command;

fn uavsec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_uavsec")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, f: &str) -> String {
    std::fs::read_to_string(dir.join(f)).unwrap()
}

#[test]
fn small_plan_succeeds_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = uavsec(&[
            "--scheme", "proposed,no-jamming", "--horizon", "60", "--slots", "12", "--seed", "7",
            "--mc-samples", "1000", "--out", d.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(a.path(), "summary.csv"), read(b.path(), "summary.csv"));
    let summary = read(a.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.contains("no-jamming_3d_perfect_T60_N12_Q0"));
    let run = "runs/proposed_3d_perfect_T60_N12_Q0";
    for f in ["trajectory.csv", "per_slot.csv", "convergence.csv"] {
        assert_eq!(read(a.path(), &format!("{run}/{f}")), read(b.path(), &format!("{run}/{f}")));
    }
    assert!(a.path().join("manifest.json").is_file());
}

#[test]
fn partial_failure_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let out = uavsec(&["--horizon", "10,60", "--slots", "12", "--mc-samples", "100", "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(read(d.path(), "summary.csv").contains("failed"));
}

#[test]
fn invalid_plans_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = d.path().to_str().unwrap();
    assert_eq!(uavsec(&["--slots", "0", "--out", o]).status.code(), Some(2));
    assert_eq!(uavsec(&["--scheme", "greedy", "--out", o]).status.code(), Some(2));
    assert_eq!(uavsec(&["--config", "/nonexistent.toml", "--out", o]).status.code(), Some(2));
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "horizon_s = 100.0\nbogus = 1\n").unwrap();
    assert_eq!(uavsec(&["--config", cfg.to_str().unwrap(), "--out", o]).status.code(), Some(2));
}

#[test]
fn config_file_and_robust_sweep() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("scenario.toml");
    std::fs::write(
        &cfg,
        r#"
st = [0.0, 0.0, 0.0]
sr = [300.0, 0.0, 0.0]
pr = [0.0, 250.0, 0.0]
eve = [150.0, 250.0, 0.0]
uav_start = [-100.0, 200.0, 100.0]
uav_end = [500.0, 200.0, 100.0]
horizon_s = 60.0
slots = 12
"#,
    )
    .unwrap();
    let out = uavsec(&[
        "--config", cfg.to_str().unwrap(), "--location", "robust", "--radius-q", "0,20", "--space", "2d",
        "--mc-samples", "100", "--out", d.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read(&d.path().join("o"), "summary.csv");
    assert!(summary.contains("proposed_2d_robust_T60_N12_Q20"));
    assert!(summary.contains("proposed_2d_robust_T60_N12_Q0"));
}
