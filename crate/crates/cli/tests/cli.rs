use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_conflict-game");

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("NO_COLOR", "1").output().expect("binary runs")
}

fn run_in(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
    path
}

fn base(x10: f64, x20: f64) -> Value {
    serde_json::json!({
        "params": {"delta": 0.5, "theta": 3.0, "gamma": 0.9, "horizon_T": 5.0,
                   "eta": 2.0, "tech_A": 1.0, "tech_alpha": 0.5, "pi_weight": 0.5},
        "x10": x10, "x20": x20
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_writes_the_trajectory_table_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in("simulate", &examples().join("default.json"), tmp.path(), &["--plot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,x1,x2,lambda1,lambda2,c1,c2,a1,a2,margin1,margin2,deadweight"
    );
    let (_, rows) = read_csv(&tmp.path().join("trajectory.csv"));
    assert!(rows.len() > 10);
    let first: f64 = rows[0][0].parse().unwrap();
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert_eq!((first, last), (0.0, 5.0));
    let report = read_json(&tmp.path().join("report.json"));
    for key in [
        "regime",
        "onset_times",
        "welfare",
        "coop_welfare",
        "efficiency_loss",
        "deadweight",
        "cumulative_outlays",
        "inequality",
        "events",
        "solver_stats",
    ] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(report["solver_stats"]["converged"], Value::Bool(true));
    assert!(tmp.path().join("plot.svg").exists());
    let (header, _) = read_csv(&tmp.path().join("plot.csv"));
    assert_eq!(header, ["series", "t", "value"]);
}

#[test]
fn every_command_is_byte_for_byte_repeatable() {
    let e = examples();
    let cases = [
        ("simulate", e.join("default.json"), vec!["--plot"]),
        ("cooperate", e.join("default.json"), vec![]),
        ("compare", e.join("default.json"), vec![]),
        ("steady", e.join("steady_golden_rule.json"), vec![]),
        ("sweep", e.join("sweep_gamma_x20.json"), vec![]),
    ];
    for (cmd, cfg, extra) in cases {
        let dir = tempfile::tempdir().unwrap();
        let oa = run_in(cmd, &cfg, dir.path(), &extra);
        let sa = snapshot(dir.path());
        let ob = run_in(cmd, &cfg, dir.path(), &extra);
        let sb = snapshot(dir.path());
        assert!(oa.status.success() && ob.status.success(), "{cmd}: {}", stderr(&oa));
        assert_eq!(oa.stdout, ob.stdout, "{cmd} stdout differs");
        assert!(!sa.is_empty());
        assert_eq!(sa, sb, "{cmd} output files differ");
    }
}

#[test]
fn invalid_parameter_exits_one_naming_field_and_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base(10.0, 2.0);
    cfg["params"]["gamma"] = 1.5.into();
    let path = write_config(tmp.path(), "bad.json", &cfg);
    let o = run_in("simulate", &path, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.starts_with("error:"), "{msg}");
    assert!(msg.contains("gamma") && msg.contains("0 < gamma < 1"), "{msg}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn usage_and_io_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let missing = tmp.path().join("missing.json");
    assert_eq!(run_in("simulate", &missing, tmp.path(), &[]).status.code(), Some(1));
    fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    assert_eq!(run_in("simulate", &tmp.path().join("broken.json"), tmp.path(), &[]).status.code(), Some(1));
    let cfg = write_config(tmp.path(), "ok.json", &base(10.0, 2.0));
    assert_eq!(run_in("simulate", &cfg, tmp.path(), &["--tol", "-1"]).status.code(), Some(1));
    let sweep = examples().join("sweep_gamma_x20.json");
    assert_eq!(run_in("simulate", &sweep, tmp.path(), &[]).status.code(), Some(1));
    assert_eq!(run_in("sweep", &cfg, tmp.path(), &[]).status.code(), Some(1));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn solver_failures_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base(10.0, 2.0);
    cfg["tolerances"] = serde_json::json!({"max_iterations": 1, "shooting_tol": 1e-14});
    let path = write_config(tmp.path(), "starved.json", &cfg);
    let o = run_in("simulate", &path, &tmp.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("no convergence"));

    cfg["sweep"] = serde_json::json!({"axes": [{"name": "gamma", "values": [0.5, 0.9]}]});
    let path = write_config(tmp.path(), "starved_sweep.json", &cfg);
    let o = run_in("sweep", &path, &tmp.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = read_json(&tmp.path().join("b/sweep.json"));
    assert_eq!(summary["failed"], 2);

    // No interior stationary point exists without production drag.
    let o = run_in("steady", &examples().join("default.json"), &tmp.path().join("c"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let steady = read_json(&tmp.path().join("c/steady.json"));
    assert_eq!(steady["trivial"]["residual_norm"], 0.0);
    assert!(steady["interior"].is_null() && steady["interior_error"].is_string());
}

#[test]
fn sweep_cells_match_single_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base(10.0, 2.0);
    cfg["sweep"] = serde_json::json!({"axes": [
        {"name": "gamma", "values": [0.3, 0.9]},
        {"name": "x20", "start": 1.0, "stop": 4.0, "points": 2}
    ]});
    let path = write_config(tmp.path(), "grid.json", &cfg);
    let o = run_in("sweep", &path, &tmp.path().join("grid"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&tmp.path().join("grid/sweep.csv"));
    assert_eq!(&header[..3], ["gamma", "x20", "status"]);
    assert_eq!(rows.len(), 4);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (k, (gamma, x20)) in [(0.3, 1.0), (0.3, 4.0), (0.9, 1.0), (0.9, 4.0)].into_iter().enumerate() {
        let row = &rows[k];
        assert_eq!(row[0].parse::<f64>().unwrap(), gamma);
        assert_eq!(row[1].parse::<f64>().unwrap(), x20);
        assert_eq!(row[col("status")], "ok");
        let mut single = base(10.0, x20);
        single["params"]["gamma"] = gamma.into();
        let one = write_config(tmp.path(), &format!("one{k}.json"), &single);
        let dir = tmp.path().join(format!("one{k}"));
        assert!(run_in("simulate", &one, &dir, &[]).status.success());
        let report = read_json(&dir.join("report.json"));
        assert_eq!(row[col("regime")], report["regime"].as_str().unwrap());
        for (c, v) in [
            ("welfare1", &report["welfare"][0]),
            ("welfare2", &report["welfare"][1]),
            ("deadweight", &report["deadweight"]),
            ("lambda1_0", &report["solver_stats"]["lam0"][0]),
            ("lambda2_0", &report["solver_stats"]["lam0"][1]),
        ] {
            assert_eq!(row[col(c)].parse::<f64>().unwrap(), v.as_f64().unwrap(), "cell {k} column {c}");
        }
    }
}

#[test]
fn symmetric_players_lose_nothing_against_cooperation() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "sym.json", &base(4.0, 4.0));
    let o = run_in("compare", &path, &tmp.path().join("out"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = read_json(&tmp.path().join("out/compare.json"));
    assert_eq!(c["regime"], "nonaggressive");
    for key in ["share_matched", "equal_split"] {
        let loss = c[key]["loss"]["total"].as_f64().unwrap();
        assert!(loss.abs() < 2e-8, "{key}: {loss}");
    }
    assert!(c["aggregate_welfare_gap"].as_f64().unwrap().abs() < 2e-8);
    assert_eq!(c["deadweight"], 0.0);
}

#[test]
fn log_utility_with_linear_technology_consumes_wealth_evenly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in("cooperate", &examples().join("linear_log.json"), tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(&tmp.path().join("cooperative.json"));
    let ratio = report["consumption_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    let (header, rows) = read_csv(&tmp.path().join("cooperative.csv"));
    assert_eq!(header, ["t", "x", "lambda", "c", "x1", "x2", "c1", "c2"]);
    let last = rows.last().unwrap();
    let x_end: f64 = last[1].parse().unwrap();
    assert!(x_end <= 1e-6 * 10.0, "{x_end}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("c(0)*T/x0"));
}

#[test]
fn cooperative_shares_add_up_to_the_aggregate() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base(10.0, 2.0);
    cfg["params"]["pi_weight"] = 0.3.into();
    let path = write_config(tmp.path(), "coop.json", &cfg);
    let o = run_in("cooperate", &path, &tmp.path().join("out"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&tmp.path().join("out/cooperative.csv"));
    assert!(rows.len() > 10);
    for row in &rows {
        let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        let (x, c, x1, x2, c1, c2) = (v[1], v[3], v[4], v[5], v[6], v[7]);
        assert!((x1 + x2 - x).abs() <= 1e-12 * x.abs().max(1e-300), "{row:?}");
        assert!((c1 + c2 - c).abs() <= 1e-12 * c, "{row:?}");
        assert!((x1 - 0.3 * x).abs() <= 1e-15 * x.abs().max(1e-300), "{row:?}");
    }
}

#[test]
fn cooperative_weight_outside_the_unit_interval_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    for pi in [0.0, 1.0, 1.2] {
        let mut cfg = base(10.0, 2.0);
        cfg["params"]["pi_weight"] = pi.into();
        let path = write_config(tmp.path(), "bad.json", &cfg);
        let o = run_in("cooperate", &path, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains("pi_weight"), "{}", stderr(&o));
    }
}

#[test]
fn tolerance_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = examples().join("default.json");
    let loose = run_in("simulate", &cfg, &tmp.path().join("loose"), &["--tol", "1e-5"]);
    let tight = run_in("simulate", &cfg, &tmp.path().join("tight"), &[]);
    assert!(loose.status.success() && tight.status.success());
    let steps = |d: &str| read_json(&tmp.path().join(d).join("report.json"))["solver_stats"]["accepted_steps"]
        .as_u64()
        .unwrap();
    assert!(steps("loose") < steps("tight"));
}

#[test]
fn resampling_gives_a_uniform_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base(10.0, 2.0);
    cfg["output"] = serde_json::json!({"resample": 11});
    let path = write_config(tmp.path(), "r.json", &cfg);
    assert!(run_in("simulate", &path, &tmp.path().join("o"), &[]).status.success());
    let (_, rows) = read_csv(&tmp.path().join("o/trajectory.csv"));
    assert_eq!(rows.len(), 11);
    for (k, row) in rows.iter().enumerate() {
        let t: f64 = row[0].parse().unwrap();
        assert!((t - 0.5 * k as f64).abs() < 1e-12);
    }
}

#[test]
fn example_configs_round_trip() {
    use conflict_game_cli::config::RunConfig;
    for entry in fs::read_dir(examples()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_json()).unwrap(), cfg, "{}", path.display());
    }
}
