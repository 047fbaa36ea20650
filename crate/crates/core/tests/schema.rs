use std::collections::BTreeSet;
use std::path::PathBuf;

use chemosim::harness::{load_run_config, load_sweep_config};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema(name: &str) -> Value {
    let text = std::fs::read_to_string(root().join("schema").join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn required(v: &Value) -> BTreeSet<String> {
    v["required"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

const MINIMAL: &str = r#"{
  "params": {"d": 3, "m1": 1.5, "m2": 1.5},
  "grid": {"N": 64, "R": 6.0},
  "init_u": {"variant": "Gaussian", "M": 1.0, "t": 0.2},
  "init_w": {"variant": "Gaussian", "M": 1.0, "t": 0.2}
}"#;

#[test]
fn run_schema_matches_the_parser() {
    let s = schema("run_config.schema.json");
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("min.json");
    std::fs::write(&path, MINIMAL).unwrap();
    let mut cfg = load_run_config(&path).unwrap();
    cfg.critical_mass = Some(200.0);
    let full = serde_json::to_value(&cfg).unwrap();

    assert_eq!(keys(&s["properties"]), keys(&full));
    assert_eq!(required(&s), keys(&serde_json::from_str::<Value>(MINIMAL).unwrap()));
    let props = &s["properties"];
    assert_eq!(keys(&props["solver"]["properties"]), keys(&full["solver"]));
    assert_eq!(keys(&props["params"]["properties"]), keys(&full["params"]));
    for (k, v) in full["solver"].as_object().unwrap() {
        assert_eq!(&props["solver"]["properties"][k]["default"], v, "default of solver.{k}");
    }

    // every dropped required key is a parse error
    for k in required(&s) {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v.as_object_mut().unwrap().remove(&k);
        std::fs::write(&path, v.to_string()).unwrap();
        assert!(load_run_config(&path).is_err(), "{k}");
    }
}

#[test]
fn sweep_schema_matches_the_parser() {
    let s = schema("sweep_config.schema.json");
    assert_eq!(required(&s["properties"]["axes"]), ["M1", "M2", "m1", "m2"].map(String::from).into());
    let sweep = load_sweep_config(&root().join("configs/sweep_dichotomy.json")).unwrap();
    assert_eq!(sweep.len(), 8);
    let defaults = serde_json::json!({"workers": 1, "max_runs": 4096});
    for k in ["workers", "max_runs"] {
        assert_eq!(s["properties"][k]["default"], defaults[k]);
    }
}

#[test]
fn shipped_configs_load() {
    for name in ["subcritical_gaussian.json", "blowup_supercritical.json"] {
        load_run_config(&root().join("configs").join(name)).unwrap();
    }
}
