use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wfgem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfgem"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn constants_table_has_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let out = wfgem(dir.path(), &["constants", "--a", "0.5", "--b", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("K = 0.5"));
    let csv = read(dir.path(), "constants.csv");
    assert!(csv.starts_with("quantity,arg,value\n"));
    assert!(csv.contains("K,,0.5\n"));
}

#[test]
fn harnack_check_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = wfgem(dir.path(), &["verify", "harnack1d", "--a", "0.5", "--b", "0.5", "--p", "2", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reports: serde_json::Value = serde_json::from_str(&read(dir.path(), "reports.json")).unwrap();
    assert_eq!(reports[0]["name"], "harnack_1d");
    assert_eq!(reports[0]["status"], "pass");
    assert_eq!(reports[0]["params"]["p"], serde_json::json!([2.0]));
    let summary = read(dir.path(), "summary.csv");
    assert!(summary.starts_with("check,params_hash,margin,status\n"));
    assert!(summary.contains(",pass"));
}

#[test]
fn unknown_config_key_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[numerics]\ndtt = 0.1\n").unwrap();
    let out = wfgem(dir.path(), &["constants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dtt"));
}

#[test]
fn invalid_values_and_usage_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wfgem(dir.path(), &["constants", "--a", "-1"]).status.code(), Some(3));
    assert_eq!(wfgem(dir.path(), &["simulate", "--x0", "1.5"]).status.code(), Some(3));
    assert_eq!(wfgem(dir.path(), &["verify", "no-such-check"]).status.code(), Some(3));
    assert_eq!(wfgem(dir.path(), &["frobnicate"]).status.code(), Some(3));
}

#[test]
fn empty_config_uses_documented_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let out = wfgem(dir.path(), &["constants", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["seed"], 42);
    assert_eq!(manifest["config"]["params"]["a"], 0.5);

    let help = Command::new(env!("CARGO_BIN_EXE_wfgem")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("seed = 42") && text.contains("Exit codes"));
}

#[test]
fn artifacts_are_byte_identical_across_runs_and_thread_counts() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["simulate", "--n-paths", "8", "--horizon", "0.2", "--seed", "5"];
    let a = wfgem(d1.path(), &[&args[..], &["--threads", "1"]].concat());
    let b = wfgem(d2.path(), &[&args[..], &["--threads", "3"]].concat());
    assert!(a.status.success() && b.status.success());
    for name in ["paths.csv", "mc.json"] {
        assert_eq!(read(d1.path(), name), read(d2.path(), name), "{name}");
    }
    let paths = read(d1.path(), "paths.csv");
    assert!(paths.starts_with("t,x_0,x_1,"));
    assert_eq!(paths.lines().count(), 1 + 201);

    // the manifest carries the timestamp and hashes of the other artifacts
    let m: serde_json::Value = serde_json::from_str(&read(d1.path(), "manifest.json")).unwrap();
    assert!(m["timestamp"].is_string());
    assert_eq!(m["seed"], 5);
    let arts = m["artifacts"].as_array().unwrap();
    assert!(arts.iter().any(|a| a["path"] == "paths.csv" && a["schema"] == "path/1"));
}

#[test]
fn kernel_grid_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = wfgem(dir.path(), &["kernel", "--grid", "5", "--t", "0.5,1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("kernel.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "x", "y", "value", "trunc_err"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 5 * 5);
    for r in &rows {
        let v: f64 = r[3].parse().unwrap();
        let e: f64 = r[4].parse().unwrap();
        assert!(v > 0.0 && e >= 0.0 && e < 1e-6);
    }
}

#[test]
fn product_kernel_gem_and_coupling_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = wfgem(dir.path(), &["kernel", "--product", "--n", "3", "--grid", "3", "--t", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(dir.path(), "kernel.csv").lines().count(), 1 + 9);

    let out = wfgem(dir.path(), &["gem-sample", "--alpha", "0.5", "--theta", "1", "--n", "4", "--count", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gem = read(dir.path(), "gem_samples.csv");
    assert!(gem.starts_with("i,mass_1,mass_2,mass_3,mass_4,remainder\n"));
    assert_eq!(gem.lines().count(), 51);

    let out = wfgem(dir.path(), &["simulate", "--gem", "--n", "3", "--horizon", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(dir.path(), "gem_path.csv").starts_with("t,mass_1,mass_2,mass_3,remainder\n"));

    let out = wfgem(dir.path(), &["couple", "--x0", "0.1", "--y0", "0.9", "--horizon", "1", "--dt", "1e-3", "--n-paths", "200", "--scheme", "lamperti"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(dir.path(), "coupling_path.csv").starts_with("t,x,y\n"));
    let s: serde_json::Value = serde_json::from_str(&read(dir.path(), "coupling_summary.json")).unwrap();
    assert!(s["coupled_fraction"].as_f64().unwrap() > 0.9);
}
