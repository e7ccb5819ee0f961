use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use zml_core::harness::RunConfig;

fn zml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zml"))
        .args(args)
        .env_remove("ZML_THREADS")
        .env_remove("ZML_OUT")
        .output()
        .expect("binary runs")
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

// key paths of a JSON document, arrays collapsed to []
fn key_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                out.insert(p.clone());
                key_paths(x, &p, out);
            }
        }
        Value::Array(a) => {
            if let Some(x) = a.iter().find(|x| x.is_object()) {
                key_paths(x, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.json");
    fs::write(
        &path,
        r#"{"grid": {"length": 20.0}, "toggles": {"histogram": true, "zero_check": true}}"#,
    )
    .unwrap();
    path
}

#[test]
fn bundled_configs_match_presets() {
    let desk = RunConfig::from_json(&fs::read_to_string(example("levinson_desk.json")).unwrap()).unwrap();
    assert_eq!(desk, RunConfig::levinson_desk());
    let ms = RunConfig::from_json(&fs::read_to_string(example("meansquare.json")).unwrap()).unwrap();
    assert_eq!(ms, RunConfig::mean_square_desk());
}

#[test]
fn report_schema_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = zml(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let mut keys = BTreeSet::new();
    key_paths(&report, "", &mut keys);
    let actual: Vec<String> = keys.into_iter().collect();
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_keys.txt")).unwrap();
    let expected: Vec<String> = golden.lines().map(str::to_string).collect();
    assert_eq!(actual, expected);
    for f in ["profile.csv", "histogram.csv", "timing.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 22);
}

#[test]
fn run_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut reports = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = zml(&["--threads", "2", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn levinson_desk_example_reports_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let o = zml(&["run", "--config", example("levinson_desk.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let k = report["principal"]["kappa_bound"].as_f64().unwrap();
    assert!(k > 0.0 && k < 1.0);
    assert!(stdout(&o).contains("kappa_bound"));
}

#[test]
fn meansquare_example_reports_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = zml(&["run", "--config", example("meansquare.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let m = &report["mean_square"];
    assert!(m["ratio"].as_f64().unwrap() > 0.0);
    assert!((m["c1r"].as_f64().unwrap() - 1.04248).abs() < 1e-4);
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(zml(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let typo = dir.path().join("typo.json");
    fs::write(&typo, r#"{"params": {"alpah": 2.0}}"#).unwrap();
    assert_eq!(zml(&["run", "--config", typo.to_str().unwrap()]).status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{").unwrap();
    assert_eq!(zml(&["run", "--config", broken.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn check_exit_codes() {
    let o = zml(&["check", "translation"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("[PASS]")).count() >= 4);
    let bad = zml(&["check", "bogus"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Usage"));
    let env = Command::new(env!("CARGO_BIN_EXE_zml")).arg("check").env("ZML_SUITE", "tanh-typo").output().unwrap();
    assert_eq!(env.status.code(), Some(2));
}

#[test]
fn zeros_up_to_50() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.csv");
    let o = zml(&["zeros", "--t-lo", "0", "--t-hi", "50", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("10 zeros"));
    let rows = fs::read_to_string(&path).unwrap();
    assert_eq!(rows.lines().skip(1).count(), 10);
}

#[test]
fn first_zero_from_env_range() {
    let o = Command::new(env!("CARGO_BIN_EXE_zml"))
        .arg("zeros")
        .env("ZML_T_LO", "14")
        .env("ZML_T_HI", "15")
        .env_remove("ZML_OUT")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let t: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert!((t - 14.134725).abs() < 1e-6);
}

#[test]
fn zeros_range_errors() {
    assert_eq!(zml(&["zeros", "--t-lo", "50", "--t-hi", "10"]).status.code(), Some(2));
    assert_eq!(zml(&["zeros", "--t-lo", "0", "--t-hi", "2e5"]).status.code(), Some(1));
}
