use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ecodrive_core::harness::SCENARIO1_TOML;
use ecodrive_core::SimConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecodrive"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

/// Scenario 1 with a cheap controller and a short horizon, for speed.
fn quick_config(dir: &Path, total_time: f64) -> PathBuf {
    let mut cfg = SimConfig::scenario1().with_controller(ecodrive_core::ControllerKind::Passive);
    cfg.sim.total_time_s = total_time;
    let path = dir.join("quick.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    path
}

#[test]
fn validate_accepts_bundled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario1.toml");
    fs::write(&path, SCENARIO1_TOML).unwrap();
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("3 vehicles"), "{stdout}");
    assert!(stdout.contains("800 steps"), "{stdout}");
}

#[test]
fn missing_config_exits_2_and_names_path() {
    let out = run(&["validate", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/cfg.toml"));

    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--config",
        "/nonexistent/cfg.toml",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = SCENARIO1_TOML
        .replace("dt = 0.5", "dt = -0.5")
        .replace("compare_kinds = [", "compare_kinds_unused = [");
    fs::write(&path, &text).unwrap();
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let mut cfg = SimConfig::scenario1();
    cfg.sim.compare_kinds.clear();
    cfg.vehicles.initial_velocities.pop();
    fs::write(&path, cfg.to_toml()).unwrap();
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("compare_kinds"), "{stderr}");
    assert!(stderr.contains("initial_velocities"), "{stderr}");
}

#[test]
fn run_writes_log_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 20.0);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "42",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let jsonl = files_with_suffix(&out_dir, "-trajectory.jsonl");
    let csv = files_with_suffix(&out_dir, "-summary.csv");
    let manifest = files_with_suffix(&out_dir, "-manifest.json");
    assert_eq!((jsonl.len(), csv.len(), manifest.len()), (1, 1, 1));

    let lines = fs::read_to_string(&jsonl[0]).unwrap();
    assert_eq!(lines.lines().count(), 3 * 40);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["step"], 0);

    let summary = fs::read_to_string(&csv[0]).unwrap();
    let mut rows = summary.lines();
    assert_eq!(
        rows.next().unwrap(),
        "run,vehicle,controller,mpg,fuel_ml,distance_m,idle_s,min_spacing_m,violations"
    );
    assert_eq!(rows.count(), 3);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest[0]).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["command"], "run");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    let id = m["run_id"].as_str().unwrap();
    for p in jsonl.iter().chain(&csv) {
        assert!(p.file_name().unwrap().to_string_lossy().contains(id));
    }
    assert_eq!(m["config"]["sim"]["total_time_s"], 20.0);
}

#[test]
fn same_seed_gives_identical_digests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 20.0);
    let digests = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "42",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&files_with_suffix(&out_dir, "-manifest.json")[0]).unwrap())
                .unwrap();
        m["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["sha256"].as_str().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(digests("a"), digests("b"));
}

#[test]
fn compare_writes_per_run_rows_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::scenario1();
    cfg.sim.total_time_s = 10.0;
    let path = dir.path().join("cmp.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    let out_dir = dir.path().join("cmp");
    let out = run(&[
        "compare",
        "--config",
        path.to_str().unwrap(),
        "--runs",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let runs = fs::read_to_string(&files_with_suffix(&out_dir, "-runs.csv")[0]).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 5 * 3);
    let table = fs::read_to_string(&files_with_suffix(&out_dir, "-table.csv")[0]).unwrap();
    let header = table.lines().next().unwrap();
    assert_eq!(header, "vehicle,Ideal,Passive,Proposed,CE,FrozenTime");
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn compare_rejects_zero_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), 10.0);
    let out = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_fixture_run_covers_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario1.toml");
    fs::write(&path, SCENARIO1_TOML).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&files_with_suffix(&out_dir, "-trajectory.jsonl")[0]).unwrap();
    let mut per_vehicle = [0usize; 3];
    for line in text.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["controller"], "proposed");
        per_vehicle[rec["vehicle"].as_u64().unwrap() as usize] += 1;
    }
    assert_eq!(per_vehicle, [800; 3]);
}
