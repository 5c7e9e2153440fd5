use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpspec")).args(args).env_remove("FPSPEC_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fpspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn kappa_report_is_json() {
    let o = run(&["kappa", "--beta", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["kappa_shoot"].as_f64().unwrap() > 0.0);
    assert!(v["kappa_scan"].is_null());
}

#[test]
fn excluded_beta_is_a_config_error() {
    let o = run(&["kappa", "--beta", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("logarithmic"));
    assert_eq!(run(&["scan", "--beta", "6"]).status.code(), Some(2));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["scan", "--points", "0"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--eta-min", "1e-2", "--eta-max", "1e-3"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--eta", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["kappa", "--tol", "1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn symmetric_scan_gives_conjugate_columns() {
    let o = run(&["scan", "--beta", "3", "--eta", "2e-3", "--eta", "-2e-3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eta,re_mu,im_mu,oracle_re_mu,oracle_im_mu,rel_gap,b_residual,status");
    let row = |i: usize| lines[i].split(',').map(str::to_string).collect::<Vec<_>>();
    let (a, b) = (row(1), row(2));
    assert_eq!(a[1], b[1]);
    let (ia, ib): (f64, f64) = (a[2].parse().unwrap(), b[2].parse().unwrap());
    assert_eq!(ia, -ib);
    assert_eq!(a[7], "ok");
    // 17 significant digits.
    assert_eq!(a[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert!(lines[3].starts_with("slope,") && lines[4].starts_with("kappa,"));
}

#[test]
fn output_is_byte_stable_across_thread_counts() {
    let a = scratch("a.csv");
    let b = scratch("b.csv");
    let common = ["scan", "--beta", "4", "--eta-min", "1e-3", "--eta-max", "1e-2", "--points", "4"];
    let mut args_a = common.to_vec();
    args_a.extend(["--jobs", "1", "--out", a.to_str().unwrap()]);
    let mut args_b = common.to_vec();
    args_b.extend(["--jobs", "3", "--out", b.to_str().unwrap()]);
    assert_eq!(run(&args_a).status.code(), Some(0));
    assert_eq!(run(&args_b).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_supplies_defaults() {
    let cfg = scratch("config.json");
    std::fs::write(&cfg, r#"{"beta": 4.0, "format": "csv"}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fpspec")).args(["kappa"]).env("FPSPEC_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("beta,kappa_shoot"));
    assert!(text.lines().nth(1).unwrap().starts_with("4.0000000000000000e0,"));
    // Flags win over the file.
    let o = Command::new(env!("CARGO_BIN_EXE_fpspec")).args(["kappa", "--format", "json"]).env("FPSPEC_CONFIG", &cfg).output().unwrap();
    assert!(stdout(&o).trim_start().starts_with('{'));
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fpspec")).args(["kappa"]).env("FPSPEC_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kappa_with_scan_check() {
    let o = run(&["kappa", "--beta", "3", "--check-scan", "--jobs", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rel_gap"].as_f64().unwrap() <= 0.05);
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.ends_with("PASS")));
    let o = run(&["selftest", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["pass"].as_bool().unwrap()));
}
