use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: [&str; 8] = ["--grid-panels", "24", "--grid-nodes", "8", "--rmin", "1e-3", "--rmax", "1e3"];

fn tms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tms")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn thresholds_default_run() {
    let out = tms(&["thresholds"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let m_star = v["result"]["m_star"].as_f64().unwrap();
    assert!((m_star - 0.0734916).abs() < 1e-6);
    assert_eq!(v["tms_version"], Value::String(tms_core::VERSION.into()));
    assert_eq!(v["config"]["seed"], Value::String(tms_core::montecarlo::DEFAULT_SEED.to_string()));
}

#[test]
fn tolerance_tightens_threshold_residuals() {
    let loose = json(&tms(&["thresholds"]));
    let out = tms(&["thresholds", "--tolerance", "1e-12"]);
    assert_eq!(out.status.code(), Some(0));
    let tight = json(&out);
    let r = |v: &Value| v["result"]["residuals"][0].as_f64().unwrap();
    assert!(r(&tight) <= 1e-12 && r(&tight) < r(&loose));
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["thresholds", "--m-points"][..], &["scan", "--grid-panels", "x"], &["nope"], &["forms", "--beta", "1,2"]] {
        assert_eq!(tms(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failed_checks_exit_one() {
    let out = tms(&["asymptotics", "--tolerance", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], Value::Bool(false));
}

#[test]
fn scan_rows_and_rerun_from_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let mut args = vec!["scan", "--ell", "1", "--m-points", "21", "--stamp", "--out", first.to_str().unwrap()];
    args.extend(SMALL);
    assert_eq!(tms(&args).status.code(), Some(0));
    let text = fs::read_to_string(&first).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# stamp")));
    assert!(text.contains(&format!("#! tms_version = {}", tms_core::VERSION)));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 22);
    let out = tms(&["scan", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body(&first), body(&second));
}

#[test]
fn sector_zero_scan_stays_above_the_bottom() {
    let mut args = vec!["scan", "--ell", "0", "--m-points", "4"];
    args.extend(SMALL);
    let out = tms(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().find(|l| l.starts_with("m,")).unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for row in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("m,")) {
        let f: Vec<&str> = row.split(',').collect();
        let bottom: f64 = f[col("bottom")].parse().unwrap();
        let sigma: f64 = f[col("sigma_energy")].parse().unwrap();
        assert!(bottom > 0.0 && sigma >= bottom * (1.0 - 1e-9));
    }
}

#[test]
fn asymptotics_slope_ratio() {
    let out = tms(&["asymptotics"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ratio = v["result"]["slope"].as_f64().unwrap()
        / (4.0 * std::f64::consts::PI * v["result"]["xi_p1"].as_f64().unwrap());
    assert!((0.999..=1.001).contains(&ratio));
}

#[test]
fn schur_sector_one_passes() {
    let out = tms(&["schur", "--ell", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["result"]["sup_row"].as_f64().unwrap().is_finite());
}

#[test]
fn friedrichs_beta_reproduces_the_friedrichs_form() {
    let mut args = vec!["forms", "--beta", "inf,inf,inf", "--samples", "20000"];
    args.extend(SMALL);
    let out = tms(&args);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["beta_form"], v["result"]["friedrichs_form"]);
}

#[test]
fn csv_format_for_report_commands() {
    let out = tms(&["schur", "--ell", "2", "--format", "csv", "--grid-panels", "8", "--rmin", "1e-2", "--rmax", "1e2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("#! command = schur"));
    assert!(text.lines().any(|l| l.starts_with("result.sup_row,")));
    assert!(text.lines().any(|l| l == "pass,true"));
}
