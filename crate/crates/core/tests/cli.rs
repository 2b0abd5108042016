//! The command-line contract: exit codes, metadata headers, determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_planar-opoly"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("planar-opoly-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(sub: &str, config: &str, dir: &Path) -> std::process::Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    bin()
        .args([
            sub,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap()
}

#[test]
fn malformed_json_exits_with_schema_code() {
    let dir = scratch("malformed");
    let out = run("droplet", "{\"tau\": ", &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_violation_reports_the_field_path() {
    let dir = scratch("schema");
    let out = run("density", r#"{"density": {"xi_points": -4}}"#, &dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("density.xi_points"), "{err}");
}

#[test]
fn numerical_failure_exits_with_stage_tag() {
    let dir = scratch("stage");
    // two Picard sweeps cannot reach 1e-13 on a non-radial droplet
    let cfg = r#"{"potential": {"family": "hele_shaw", "params": {"alpha": 0.5, "poly": [{"k": 2, "t": [0.1, 0.0]}]}},
                  "tau": 1.0, "flow": {"half_width": 0.2, "options": {"max_iter": 2, "tol": 1e-13}}}"#;
    let out = run("flow", cfg, &dir);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `"));
}

#[test]
fn droplet_output_is_deterministic_with_header() {
    let dir = scratch("determinism");
    let cfg = r#"{"potential": {"family": "hele_shaw", "params": {"alpha": 0.5, "poly": [{"k": 2, "t": [0.1, 0.0]}]}},
                  "droplet": {"taus": [0.5, 1.0], "points": 32}}"#;
    assert_eq!(run("droplet", cfg, &dir).status.code(), Some(0));
    let first = std::fs::read(dir.join("out/droplet.csv")).unwrap();
    let first_json = std::fs::read(dir.join("out/droplet.json")).unwrap();
    assert_eq!(run("droplet", cfg, &dir).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.join("out/droplet.csv")).unwrap());
    assert_eq!(
        first_json,
        std::fs::read(dir.join("out/droplet.json")).unwrap()
    );
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(
        header.starts_with("# planar-opoly ") && header.contains("config_sha256="),
        "{header}"
    );
    assert_eq!(lines.next().unwrap(), "tau,theta,x,y");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // 17 significant digits: d.dddddddddddddddde±x
    assert!(
        row.iter()
            .all(|c| c.split('e').next().unwrap().trim_start_matches('-').len() == 18),
        "{row:?}"
    );
    assert_eq!(text.lines().count(), 2 + 64);
}

#[test]
fn ginibre_density_is_one_half_at_the_edge() {
    let dir = scratch("density");
    let out = run(
        "density",
        r#"{"n": 200, "m": 200, "density": {"xi_min": -1.0, "xi_max": 1.0, "xi_points": 3}}"#,
        &dir,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("out/density.csv")).unwrap();
    let mid: Vec<f64> = text
        .lines()
        .nth(3)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(mid[0], 0.0);
    assert!((mid[1] - 0.5).abs() < 0.02, "{}", mid[1]);
}

#[test]
fn expand_emits_coefficients_json() {
    let dir = scratch("expand");
    let out = run("expand", r#"{"tau": 1.0, "kappa": 2}"#, &dir);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("out/coefficients.json")).unwrap()).unwrap();
    assert_eq!(v["meta"]["subcommand"], "expand");
    assert_eq!(v["data"]["b"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = scratch("verify");
    let out = run("verify", r#"{"verify": {"criteria": ["A5", "A9"]}}"#, &dir);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.join("out/acceptance.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap() == "id,pass,metric,value,bound");
    assert!(text.contains("A5,true,projection_idempotence"));
    let out = run("verify", r#"{"verify": {"criteria": ["A10"]}}"#, &dir);
    assert_eq!(out.status.code(), Some(2));
}
