//! Welfare of the share-matched cooperative baseline against the game, as
//! reported by `compare` on every conflict configuration of the suite.

use std::fs;
use std::process::Command;

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_conflict-game");

fn config(x10: f64, x20: f64, overrides: Value) -> Value {
    let mut params = json!({"delta": 0.5, "theta": 3.0, "gamma": 0.9, "horizon_T": 5.0,
                            "eta": 2.0, "tech_A": 1.0, "tech_alpha": 0.5, "pi_weight": 0.5});
    for (k, v) in overrides.as_object().unwrap() {
        params[k] = v.clone();
    }
    json!({"params": params, "x10": x10, "x20": x20})
}

fn compare(cfg: &Value) -> Value {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cfg.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = tmp.path().join("out");
    let o = Command::new(BIN)
        .args(["compare", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&fs::read_to_string(out.join("compare.json")).unwrap()).unwrap()
}

fn conflict_suite() -> Vec<Value> {
    vec![
        config(10.0, 2.0, json!({})),
        config(10.0, 4.0, json!({})),
        config(5.0, 1.0, json!({"eta": 1.0})),
        config(20.0, 3.0, json!({"delta": 0.3, "theta": 5.0, "gamma": 0.7})),
        config(3.0, 12.0, json!({"tech_mu": 0.1, "horizon_T": 8.0})),
    ]
}

#[test]
fn share_matched_cooperation_dominates_every_conflict() {
    let mut failures = Vec::new();
    for cfg in conflict_suite() {
        let c = compare(&cfg);
        assert_eq!(c["regime"], "conflict");
        let loss = &c["share_matched"]["loss"];
        let total = loss["total"].as_f64().unwrap();
        let per: Vec<f64> = loss["per_player"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        if !(total > 0.0) || per.iter().any(|l| *l < -2e-8) {
            failures.push(format!("({}, {}): per player {per:?}, total {total}", cfg["x10"], cfg["x20"]));
        }
    }
    assert!(failures.is_empty(), "cooperation loses:\n{}", failures.join("\n"));
}
