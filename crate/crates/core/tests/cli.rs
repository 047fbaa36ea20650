use std::path::Path;
use std::process::{Command, Output};

fn chemosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemosim"))
        .args(args)
        .env_remove("CHEMOSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SUBCRITICAL: &str = r#"{
  "params": {"d": 3, "m1": 1.5, "m2": 1.5},
  "grid": {"N": 64, "R": 6.0},
  "solver": {"t_end": 0.05, "dt_max": 0.01, "record_every": 5},
  "init_u": {"variant": "Gaussian", "M": 1.0, "t": 0.2},
  "init_w": {"variant": "Gaussian", "M": 1.0, "t": 0.2}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_subcritical_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.json", SUBCRITICAL);
    let out = tmp.path().join("out");
    let o = chemosim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ReachedHorizon");
    assert_eq!(summary["regime"], "Subcritical");
    assert!(std::fs::read_to_string(out.join("traces.svg")).unwrap().contains("<polyline"));

    let again = tmp.path().join("again");
    assert_eq!(code(&chemosim(&["simulate", "--config", &cfg, "--out", again.to_str().unwrap()])), 0);
    assert_eq!(csv, std::fs::read_to_string(again.join("series.csv")).unwrap());

    let svg = tmp.path().join("replot.svg");
    let o = chemosim(&["plot", "--csv", out.join("series.csv").to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(svg.exists());
}

#[test]
fn simulate_blowup_exits_two() {
    // collapsing compact data for m = 1.1 on a coarse grid; the core fills the centre cell
    let text = r#"{
      "params": {"d": 3, "m1": 1.1, "m2": 1.1},
      "grid": {"N": 128, "R": 0.02},
      "solver": {"t_end": 10.0, "dt_max": 1e-9, "dt_min": 1e-13, "record_every": 1000},
      "init_u": {"variant": "CompactPolynomial", "A": 33332172.98565769, "a": 0.01},
      "init_w": {"variant": "CompactPolynomial", "A": 33332172.98565769, "a": 0.01}
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.json", text);
    let out = tmp.path().join("out");
    let o = chemosim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "BlowUpDetected");
    assert!(summary["G0"].as_f64().unwrap() < 0.0);
}

#[test]
fn simulate_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    assert_eq!(code(&chemosim(&["simulate", "--config", missing.to_str().unwrap()])), 1);
    let bad = write(tmp.path(), "bad.json", &SUBCRITICAL.replace("\"N\": 64", "\"N\": -3"));
    let o = chemosim(&["simulate", "--config", &bad]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid.N") && err.contains("line"), "{err}");
}

#[test]
fn classify_prints_tags() {
    for (m1, m2, tag) in [
        ("1.5", "1.5", "Subcritical"),
        ("1.3333333333333333", "1.3333333333333333", "CriticalI"),
        ("1.1", "1.1", "Supercritical"),
    ] {
        let o = chemosim(&["classify", "--m1", m1, "--m2", m2, "--d", "3"]);
        assert_eq!(code(&o), 0);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["tag"], tag);
        assert!(v["slack1"].is_number() && v["slack2"].is_number());
    }
    assert_eq!(code(&chemosim(&["classify", "--m1", "abc", "--m2", "1.5"])), 1);
    assert_eq!(code(&chemosim(&["classify", "--m1", "0.5", "--m2", "1.5"])), 1);
}

#[test]
fn sweep_rows_follow_axes() {
    let text = format!(
        r#"{{"axes": {{"m1": [1.5, 1.4], "m2": [1.5], "M1": [1.0, 0.5], "M2": [1.0]}}, "workers": 3, "base": {SUBCRITICAL}}}"#
    );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sweep.json", &text);
    let out = tmp.path().join("sweep");
    let o = chemosim(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "m1,m2,M1,M2,regime,status,t_final,F0,G0,margin");
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("1.5,1.5,1,1,Subcritical,ReachedHorizon"));
    assert!(rows[2].starts_with("1.5,1.5,0.5,1,"));
    assert!(rows[3].starts_with("1.4,1.5,1,1,"));

    let empty = write(tmp.path(), "empty.json", &text.replace("\"M2\": [1.0]", "\"M2\": []"));
    assert_eq!(code(&chemosim(&["sweep", "--config", &empty])), 1);
}

#[test]
fn sweep_with_every_point_failing_exits_one() {
    // table data cannot take a swept mass
    let base = SUBCRITICAL.replace(
        r#""init_u": {"variant": "Gaussian", "M": 1.0, "t": 0.2}"#,
        r#""init_u": {"variant": "Table", "path": "missing.csv"}"#,
    );
    let text = format!(r#"{{"axes": {{"m1": [1.5], "m2": [1.5], "M1": [1.0], "M2": [1.0]}}, "base": {base}}}"#);
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sweep.json", &text);
    let out = tmp.path().join("s");
    assert_eq!(code(&chemosim(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()])), 1);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",Failed,"));
}

#[test]
fn constants_are_seeded_and_restricted() {
    let a = chemosim(&["constants", "--d", "3", "--seed", "5", "--samples", "40"]);
    let b = chemosim(&["constants", "--d", "3", "--seed", "5", "--samples", "40"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let c = chemosim(&["constants", "--d", "3", "--seed", "6", "--samples", "40"]);
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let vc: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    let (ca, cc) = (va["C_c"].as_f64().unwrap(), vc["C_c"].as_f64().unwrap());
    assert!((ca - cc).abs() <= 1e-3 * ca);
    for key in ["C_c", "C_star_L1", "C_star_L2", "M_c", "M_1c", "M_2c"] {
        assert!(va[key].as_f64().unwrap() > 0.0, "{key}");
    }
    assert_eq!(va["c_d_convention"], "newtonian");
    assert_eq!(code(&chemosim(&["constants", "--d", "2"])), 1);
}

#[test]
fn lane_emden_reports_first_zero() {
    let o = chemosim(&["lane-emden", "--d", "3", "--power", "3"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["first_zero"].as_f64().unwrap() - 6.8968).abs() < 1e-3);
    let o = chemosim(&["lane-emden", "--d", "3", "--power", "3", "--coeff", "0.25", "--radius", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["zeta0"].as_f64().unwrap() - 13.7937).abs() < 1e-3);
}
