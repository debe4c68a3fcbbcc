//! Exercises the binary: exit codes, outputs and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn symbohm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symbohm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SYMBOHM_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const EVOLVE: &str = r#"{"grid": {"points": 256, "length": 40.0},
 "window": {"t1": 0, "t2": 1, "dt": 0.01, "stride": 10},
 "state": {"kind": "gaussian", "center": 0, "momentum": 1, "width": 1}}"#;

#[test]
fn scenario_list_names_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["scenario", "list"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for id in symbohm::scenarios::ids() {
        assert!(text.contains(id), "{id} missing from list");
    }
}

#[test]
fn scenario_run_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["scenario", "run", "measurement-limit"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["passed"], Value::Bool(true));
    assert_eq!(manifest["config_hash"], report["config_hash"]);
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    for artifact in report["artifacts"].as_array().unwrap() {
        assert!(dir.path().join(artifact.as_str().unwrap()).exists());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = symbohm(&["scenario", "run", "measurement-limit", "--seed", "7"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    for name in names {
        if name == "manifest.json" {
            continue;
        }
        let (x, y) = (fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn seed_changes_config_hash() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    symbohm(&["scenario", "run", "measurement-limit", "--seed", "1"], a.path());
    symbohm(&["scenario", "run", "measurement-limit", "--seed", "2"], b.path());
    let (ra, rb) = (json(&a.path().join("report.json")), json(&b.path().join("report.json")));
    assert_ne!(ra["config_hash"], rb["config_hash"]);
}

#[test]
fn unknown_names_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["scenario", "run", "no-such-scenario"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown scenario"));
    let o = symbohm(&["verify", "no-such-suite"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_overrides_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["scenario", "run", "measurement-limit", "--set", "ensemble=0"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = symbohm(&["scenario", "run", "measurement-limit", "--set", "no.such.key=1"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = symbohm(&["scenario", "run", "measurement-limit", "--set", "window.t2=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"grid\": {\"points\": 256,\n \"length\": 40.0,,}").unwrap();
    let o = symbohm(&["evolve", "--config", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["evolve", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_overlap_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["scenario", "run", "measurement-limit", "--set", "final.center=60"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("degenerate"));
}

#[test]
fn failed_assertion_exits_one() {
    // Steps this coarse break second-order convergence of the continuity residual.
    let dir = tempfile::tempdir().unwrap();
    let o = symbohm(&["verify", "continuity", "--set", "continuity.dt=0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report = json(&dir.path().join("verify_report.json"));
    assert_eq!(report["passed"], Value::Bool(false));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn evolve_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("evolve.json");
    fs::write(&cfg, EVOLVE).unwrap();
    let out = dir.path().join("out");
    let o = symbohm(&["evolve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&out.join("manifest.json"));
    let outputs = manifest["outputs"].as_array().unwrap();
    let snaps = outputs.iter().filter(|p| p.as_str().unwrap().ends_with(".json") && p.as_str().unwrap().contains("snap_")).count();
    assert_eq!(snaps, 11);
    for p in outputs {
        assert!(out.join(p.as_str().unwrap()).exists(), "{p} missing");
    }
    assert!(manifest["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn boundary_leak_is_a_warning_not_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("evolve.json");
    fs::write(&cfg, EVOLVE).unwrap();
    let out = dir.path().join("out");
    let o = symbohm(
        &["evolve", "--config", cfg.to_str().unwrap(), "--set", "window.t2=6", "--set", "window.stride=100", "--set", "state.momentum=3"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&out.join("manifest.json"));
    let warnings = manifest["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("boundary leak")), "{warnings:?}");
}

#[test]
fn trajectories_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("traj.json");
    fs::write(
        &cfg,
        r#"{"grid": {"points": 256, "length": 40.0},
 "window": {"t1": 0, "t2": 1, "dt": 0.01, "stride": 5},
 "initial": {"kind": "gaussian", "center": -1, "momentum": 1, "width": 1},
 "final": {"kind": "gaussian", "center": 1, "momentum": 0, "width": 1},
 "seeds": 8}"#,
    )
    .unwrap();
    for lambda in ["false", "true"] {
        let out = dir.path().join(lambda);
        let set = format!("lambda={lambda}");
        let o = symbohm(&["trajectories", "--config", cfg.to_str().unwrap(), "--set", &set], &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let batch = json(&out.join("batch.json"));
        let text = batch.to_string();
        assert!(text.contains("\"ok\""), "{text}");
        assert!(out.join("lines").read_dir().unwrap().count() > 0);
    }
}

#[test]
fn threads_flag_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    symbohm(&["scenario", "run", "measurement-limit", "--threads", "1"], a.path());
    symbohm(&["scenario", "run", "measurement-limit", "--threads", "3"], b.path());
    assert_eq!(fs::read(a.path().join("report.json")).unwrap(), fs::read(b.path().join("report.json")).unwrap());
}
