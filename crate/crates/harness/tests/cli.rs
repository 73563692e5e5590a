use std::path::Path;
use std::process::{Command, Output};

use bms_harness::CSV_HEADER;

fn bms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_run(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec![
        "run",
        "--builtin",
        "ucb-grid",
        "--replications",
        "3",
        "--horizon",
        "50",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    bms(&args)
}

#[test]
fn writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ucb.csv");
    let out = small_run(&path, &["--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // 7 labels x 50 rounds.
    assert_eq!(lines.count(), 7 * 50);
    assert!(text.contains("\nucb-grid,B-MS,1,"));
    assert!(!dir.path().join("ucb.json").exists());
}

#[test]
fn json_mirror_matches_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ucb.csv");
    let out = small_run(&path, &["--json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ucb.json")).unwrap()).unwrap();
    assert_eq!(json["experiment"], "ucb-grid");
    assert_eq!(json["horizon"], 50);
    assert_eq!(json["replications"], 3);
    assert_eq!(json["rows"].as_array().unwrap().len(), 7 * 50);
    assert_eq!(json["summary"][0]["label"], "B-MS");
    let freq: f64 = json["summary"][0]["selection_frequencies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((freq - 1.0).abs() < 1e-9);
}

#[test]
fn stdout_output_is_deterministic() {
    let args = [
        "run",
        "--builtin",
        "misspec-b",
        "--replications",
        "2",
        "--horizon",
        "20",
        "--threads",
        "2",
    ];
    let a = bms(&args);
    let b = bms(&args);
    assert_eq!(a.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&a.stdout).starts_with(CSV_HEADER));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_builtin_exits_2() {
    let out = bms(&["run", "--builtin", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown builtin"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "id = \"x\"\nhorizon = 10\n").unwrap();
    assert_eq!(bms(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        bms(&["run", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    // Horizon shorter than the warm start of six learners.
    assert_eq!(
        bms(&["run", "--builtin", "ucb-grid", "--horizon", "5"]).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no/such/dir/out.csv");
    let out = small_run(&path, &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn show_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let shown = bms(&["show", "info-lock"]);
    assert_eq!(shown.status.code(), Some(0));
    let config = dir.path().join("info.toml");
    std::fs::write(&config, &shown.stdout).unwrap();

    let from_file = dir.path().join("a.csv");
    let from_builtin = dir.path().join("b.csv");
    let common = ["--replications", "2", "--horizon", "40"];
    let mut a = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        from_file.to_str().unwrap(),
    ];
    a.extend_from_slice(&common);
    let mut b = vec!["run", "--builtin", "info-lock", "--out", from_builtin.to_str().unwrap()];
    b.extend_from_slice(&common);
    assert_eq!(bms(&a).status.code(), Some(0));
    assert_eq!(bms(&b).status.code(), Some(0));
    assert_eq!(std::fs::read(from_file).unwrap(), std::fs::read(from_builtin).unwrap());
}

#[test]
fn list_names_every_builtin() {
    let out = bms(&["list"]);
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(names, bms_harness::BUILTIN_NAMES.map(String::from));
}
