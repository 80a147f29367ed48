use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(rel)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anscombe"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn verify_degenerate_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let res = run(&["verify"], &scenario("verify/degenerate.json"), &out);
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("verify: PASS"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["inequality"]["pass"], true);
    assert_eq!(report["config"]["seed"], 1);
    assert!(report["tool"]["version"].is_string());
}

#[test]
fn verify_alternating_is_carried_by_chi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let res = run(&["verify", "--samples", "1000"], &scenario("verify/alternating_two_point.json"), &out);
    assert_eq!(res.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let chi = report["inequality"]["rhs_chi"]["value"].as_f64().unwrap();
    assert!((chi - 1.0).abs() < 0.01);
    assert_eq!(report["config"]["samples"], 1000);
}

#[test]
fn compare_two_point_lambda_p_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let res = run(&["compare", "--samples", "20000"], &scenario("enumerable/e02_alternating_two_point.json"), &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = report["comparison"].as_array().unwrap();
    let row = rows.iter().find(|r| r["quantity"] == "lambda_p[linear(1)]").unwrap();
    assert_eq!(row["oracle"].as_f64().unwrap(), 0.3);
    assert!((row["mc"].as_f64().unwrap() - 0.3).abs() < 0.02);
    let chi = rows.iter().find(|r| r["quantity"] == "chi").unwrap();
    assert_eq!((chi["mc"].as_f64(), chi["oracle"].as_f64()), (Some(1.0), Some(1.0)));
}

#[test]
fn csv_output_has_the_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let res =
        run(&["estimate", "--format", "csv", "--samples", "200"], &scenario("verify/eventually_constant.json"), &out);
    assert_eq!(res.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,epsilon,delta,alpha,n,value,stderr"));
    assert!(text.lines().any(|l| l.starts_with("chi,5.00000000000e-1,2.00000000000e-1,,10,")));
    assert!(text.lines().any(|l| l.starts_with("lambda_p_infimum,,,,,")));
}

#[test]
fn oracle_reports_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let res = run(&["oracle"], &scenario("enumerable/e05_eventually_constant.json"), &out);
    assert_eq!(res.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["oracle"]["chi"].as_f64(), Some(0.25));
    let forms = &report["oracle"]["five_forms"];
    let closed = forms["closed_form"].as_f64().unwrap();
    for key in ["function_form", "enlargement_form", "open_form", "continuity_form"] {
        assert!((forms[key].as_f64().unwrap() - closed).abs() < 1e-12);
    }
}

#[test]
fn oracle_refuses_continuous_steps() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(scenario("enumerable/e04_rademacher_two_point.json")).unwrap())
            .unwrap();
    v["process"]["step_law"] = serde_json::json!({"kind": "normal", "mean": 0, "stddev": 1});
    std::fs::write(&config, v.to_string()).unwrap();
    let out = dir.path().join("r.json");
    let res = run(&["oracle"], &config, &out);
    assert_eq!(res.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&res.stderr).contains("processes::NotEnumerable"));
    assert!(!out.exists());
}

#[test]
fn bad_configs_exit_two_without_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ \"seed\": 1, ").unwrap();
    let res = run(&["verify"], &broken, &out);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("cli::ParseError"));
    assert!(!out.exists());

    let text = std::fs::read_to_string(scenario("verify/degenerate.json")).unwrap();
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, text.replace("epsilon_grid", "epsilonn_grid")).unwrap();
    let res = run(&["verify"], &unknown, &out);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("cli::ValidationError") && err.contains("epsilonn_grid"), "{err}");
    assert!(!out.exists());

    let res = run(&["verify"], &dir.path().join("missing.json"), &out);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}
