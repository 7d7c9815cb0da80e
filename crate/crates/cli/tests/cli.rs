use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nozzle_shocks::report::csv::{parse_profile, Table};
use nozzle_shocks::report::svg::polyline_points;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nozzle-shocks"))
        .args(&args[..1])
        .arg("--config")
        .arg(&cfg)
        .args(&args[1..])
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const HP: &str = r#"{"model":"HP","gamma":1.4,"m0_sq":1.2,"params":[0.05]}"#;

#[test]
fn states_table() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), HP, &["states", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.7612"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s/states.json")).unwrap()).unwrap();
    assert_eq!(json["admissibility"]["admissible"], true);
}

#[test]
fn states_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), r#"{"model":"HP","gamma":1.4,"m0_sq":1.0}"#, &["states"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NotSupersonic"));
    let o = run(dir.path(), r#"{"model":"HP","gamma":1.4,"m0_sq":2.5}"#, &["states"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("hp1"));
    let o = run(dir.path(), r#"{"model":"HP","gamma":1.4,"m0_sq":"#, &["states"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_flags_are_parse_errors() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), HP, &["solve", "--branch", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_nozzle-shocks")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_writes_profile() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), HP, &["solve", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("o/profile.csv")).unwrap();
    assert_eq!(text.lines().count(), 513);
    let table = parse_profile(&text).unwrap();
    assert_eq!(table.x.len(), 512);
    assert_eq!(table.x[0], 0.0);
    assert_eq!(*table.x.last().unwrap(), 1.0);
    assert!(table.temperature.is_none());
    let svg = fs::read_to_string(dir.path().join("o/profile.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 800 500""#) && !svg.contains("<script"));
    for field in ["u", "rho", "p"] {
        assert_eq!(polyline_points(&svg, field).unwrap().len(), 512);
    }
}

#[test]
fn vb_svg_is_monotone() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model":"VB","gamma":1.4,"q0":1.5,"delta":1,"params":[0.01],"grid_n":128}"#;
    let o = run(dir.path(), cfg, &["solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("out/profile.svg")).unwrap();
    // u decreases, so its canvas y (growing downwards) never decreases
    let pts = polyline_points(&svg, "u").unwrap();
    assert!(pts.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
}

#[test]
fn vp_divergent_footer() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model":"VP","gamma":1.4,"m0_sq":1.2,"delta":2,"params":[1e-3],"grid_n":64}"#;
    let o = run(dir.path(), cfg, &["solve", "--branch", "divergent"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = parse_profile(&fs::read_to_string(dir.path().join("out/profile.csv")).unwrap()).unwrap();
    let max_p: f64 = table.meta["max_pressure"].parse().unwrap();
    assert_eq!(max_p, table.p.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    assert_eq!(table.temperature.unwrap().len(), 64);
}

#[test]
fn solver_failure_exit_code() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model":"VP","gamma":1.4,"m0_sq":1.2,"delta":2,"params":[1e3]}"#;
    let o = run(dir.path(), cfg, &["solve"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NoRootInDomain"));
}

#[test]
fn sweep_outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model":"HP","gamma":1.4,"m0_sq":1.2,"geometric":{"start":0.1,"factor":0.1,"count":3},"grid_n":64}"#;
    for out in ["a", "b"] {
        let o = run(dir.path(), cfg, &["sweep", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 9);
    for name in names.iter().filter(|n| n.to_str() != Some("timings.json")) {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?}");
    }
    let conv = Table::parse(&fs::read_to_string(a.join("convergence.csv")).unwrap()).unwrap();
    let l1 = conv.floats("l1_to_limit").unwrap();
    assert!(l1.windows(2).all(|w| w[1] < w[0]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["succeeded"], 3);
    assert_eq!(manifest["entries"][0]["csv"], "profile_000.csv");
}

#[test]
fn sweep_partial_and_empty() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model":"VP","gamma":1.4,"m0_sq":1.2,"delta":2,"params":[1e3,1e-2],"grid_n":32}"#;
    let o = run(dir.path(), cfg, &["sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAILED NoRootInDomain"));
    let o = run(dir.path(), r#"{"model":"VP","gamma":1.4,"m0_sq":1.2,"delta":2,"params":[1e3]}"#, &["sweep"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(dir.path(), r#"{"model":"HP","gamma":1.4,"m0_sq":1.2,"params":[]}"#, &["sweep"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_reports() {
    let dir = TempDir::new().unwrap();
    let hb = r#"{"model":"HB","gamma":1.4,"q0":1.5,"params":[0.05],"grid_n":128}"#;
    let o = run(dir.path(), hb, &["oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS"));
    let vb = r#"{"model":"VB","gamma":1.4,"q0":1.5,"delta":0.5,"params":[0.01],"grid_n":128}"#;
    let o = run(dir.path(), vb, &["oracle", "--out", "r"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r/oracle.json")).unwrap()).unwrap();
    assert!(json["profile_linf_gap"].as_f64().unwrap() < 1e-5);
    let vp = r#"{"model":"VP","gamma":1.4,"m0_sq":1.2,"delta":1,"params":[5e-4]}"#;
    let o = run(dir.path(), vp, &["oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("SKIPPED"));
}
