use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rmpsim(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rmpsim"));
    cmd.args(args).env_remove("RMPSIM_OUT");
    if let Some(dir) = out {
        cmd.env("RMPSIM_OUT", dir);
    }
    cmd.output().expect("rmpsim starts")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const HEAD_ON: &str = r#"{
  "name": "head-on",
  "robots": [
    { "id": 1, "position": [0.0, 0.0], "velocity": [40.0, 0.0] },
    { "id": 2, "position": [0.5, 0.0], "velocity": [-40.0, 0.0] }
  ],
  "subtasks": [
    { "participants": [1, 2], "kind": "collision_avoidance",
      "params": { "safety_distance": 0.1, "alpha": 1e-5, "epsilon": 1e-5, "eta": 0.2 } }
  ],
  "sim": { "dt": 0.05, "t_final": 1.0 }
}"#;

#[test]
fn builtin_run_writes_csv_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmpsim(
        &["run", "--builtin", "fig3a", "--t-final", "1", "--plot"],
        Some(dir.path()),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 4 * 5);
    assert_eq!(&header[..5], ["t", "x_1", "y_1", "vx_1", "vy_1"]);
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["termination"]["status"], "completed");

    let svg = fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    assert!(svg.contains("<svg"));
    assert!(svg.contains("<polyline"));
}

#[test]
fn out_flag_wins_over_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = rmpsim(
        &[
            "run",
            "--builtin",
            "fig7",
            "--t-final",
            "0.5",
            "--out",
            flag_dir.path().to_str().unwrap(),
        ],
        Some(env_dir.path()),
    );
    assert_eq!(code(&o), 0);
    assert!(flag_dir.path().join("trajectory.csv").exists());
    assert!(!env_dir.path().join("trajectory.csv").exists());
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig7.json");
    fs::write(&path, rmpflow::Scenario::builtin("fig7").unwrap().to_json()).unwrap();
    let o = rmpsim(
        &[
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--t-final",
            "0.5",
        ],
        Some(&dir.path().join("out")),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap())
            .unwrap();
    assert!(
        summary["reference"]["max_position_deviation"]
            .as_f64()
            .unwrap()
            < 1e-9
    );
}

#[test]
fn configuration_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, HEAD_ON.replace("0.1,", "-0.1,")).unwrap();
    let o = rmpsim(
        &["run", "--scenario", bad.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));

    let o = rmpsim(
        &["run", "--builtin", "fig3a", "--dt", "0"],
        Some(dir.path()),
    );
    assert_eq!(code(&o), 1);
    let o = rmpsim(&["run", "--builtin", "no-such-scenario"], Some(dir.path()));
    assert_eq!(code(&o), 1);
    let o = rmpsim(&["run"], Some(dir.path()));
    assert_eq!(code(&o), 1);
}

#[test]
fn early_termination_exits_2_and_keeps_partial_output() {
    // Explicit steps of a damper with `η dt = 10⁶` grow without bound.
    let stiff = r#"{
      "name": "stiff",
      "robots": [ { "id": 1, "position": [0.0, 0.0], "velocity": [1.0, 0.0] } ],
      "subtasks": [ { "participants": [1], "kind": "damper", "params": { "c": 1.0, "eta": 1e6 } } ],
      "sim": { "dt": 1.0, "t_final": 200.0, "integrator": "semi-implicit-euler" }
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stiff.json");
    fs::write(&path, stiff).unwrap();
    let out = dir.path().join("out");
    let o = rmpsim(&["run", "--scenario", path.to_str().unwrap()], Some(&out));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_ne!(summary["termination"]["status"], "completed");
}

#[test]
fn verify_reports_json() {
    let o = rmpsim(&["verify", "--suite", "curvature"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!(!report["checks"].as_array().unwrap().is_empty());
}
