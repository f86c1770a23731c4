use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfb")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const NEWTON: &str = r#"
[system]
particles = 6
basis_size = 10
r_max = 8.0
l_max = 1

[kernel.newtonian]
g = 1.0
"#;

#[test]
fn run_writes_summary_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NEWTON);
    let out = dir.path().join("out");
    let res = hfb(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(stdout["hfb"]["energy"], saved["hfb"]["energy"]);
    assert!(out.join("state.json").is_file());

    let profile = hfb(&[
        "nu-profile", &cfg, "--state", out.join("state.json").to_str().unwrap(), "--lo", "-4", "--hi", "4", "--samples", "9",
    ]);
    assert_eq!(profile.status.code(), Some(0));
    let text = String::from_utf8(profile.stdout).unwrap();
    assert!(text.starts_with("mu,nu,dnu_dmu,gap\n"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NEWTON);
    let res = hfb(&["run", &cfg, "--mode", "hf", "--particles", "8"]);
    assert_eq!(res.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!(summary["hfb"].is_null());
    assert!(summary["hf_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_configs_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &NEWTON.replace("particles = 6", "particles = 5"));
    assert_eq!(hfb(&["run", &cfg]).status.code(), Some(4));
    let cfg = write_config(dir.path(), &NEWTON.replace("l_max = 1", "l_max = 1\nradius = 3"));
    let res = hfb(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&res.stderr).contains("radius"));
    let cfg = write_config(dir.path(), NEWTON);
    assert_eq!(hfb(&["sweep", &cfg]).status.code(), Some(4));
}

#[test]
fn missing_file_exits_one() {
    assert_eq!(hfb(&["run", "/nonexistent/run.toml"]).status.code(), Some(1));
}

#[test]
fn iteration_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NEWTON);
    assert_eq!(hfb(&["run", &cfg, "--max-iter", "2"]).status.code(), Some(3));
}

#[test]
fn sweep_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{NEWTON}\n[sweep]\nparameter = \"g\"\nvalues = [0.9, 1.1]\nwarm_start = true\n");
    let cfg = write_config(dir.path(), &body);
    let res = hfb(&["sweep", &cfg]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("g,hf_status,E_hf"));
    assert!(lines[1].starts_with("0.9,converged,"));
}

#[test]
fn small_check_passes() {
    let res = hfb(&["check", "--scale", "small"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
