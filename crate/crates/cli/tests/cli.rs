use std::path::Path;
use std::process::{Command, Output};

fn pmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, h: &str, phi: &str, resolution: f64) -> String {
    let path = dir.join("scenario.toml");
    let text = format!(
        "name = \"cli\"\n\n[domain]\nkind = \"disk\"\nradius = 1.0\n\n[curvature]\nh = \"{h}\"\nz_window = [-10.0, 10.0]\n\n\
         [boundary]\nphi = \"{phi}\"\n\n[solver]\nresolution = {resolution}\n"
    );
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn lists_and_shows_presets() {
    let o = pmc(&["list-scenarios"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.contains("euclidean-cap"));

    let o = pmc(&["show-scenario", "euclidean-cap"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("[curvature]"));
    assert_eq!(code(&pmc(&["show-scenario", "nope"])), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&pmc(&["frobnicate"])), 1);
    assert_eq!(code(&pmc(&["run"])), 1);
    assert_eq!(code(&pmc(&["run", "--scenario", "nope"])), 1);
    assert_eq!(code(&pmc(&["--help"])), 0);
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\n[domain]\nkind = \"disk\"\nradius = 1.0\nspin = 3\n[curvature]\nh = \"0.1\"\n").unwrap();
    let o = pmc(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stderr).unwrap().contains("spin"));

    let path = write_config(dir.path(), "0.1 +", "0", 0.125);
    assert_eq!(code(&pmc(&["check", "--config", &path])), 1);
}

#[test]
fn decreasing_h_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "0.2 - 0.1*z", "0", 0.125);
    let o = pmc(&["check", "--config", &path]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8(o.stderr).unwrap().contains("non-decreasing"));
}

#[test]
fn solvable_problem_exits_zero_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "0.3", "0.2*x1", 0.125);
    let out = dir.path().join("out");
    let o = pmc(&["run", "--config", &path, "--json", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"]["exit_code"], 0);
    assert_eq!(v["solve"]["report"]["converged"], true);
    assert!(out.join("report.json").is_file());
    assert!(out.join("field.csv").is_file());
}

#[test]
fn stalled_continuation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "1.5", "5*x1", 0.0625);
    let o = pmc(&["solve", "--config", &path, "--threads", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stdout).unwrap().contains("continuation stopped"));
}

#[test]
fn resolution_override_applies() {
    let o = pmc(&["solve", "--scenario", "euclidean-cap", "--resolution", "0.125", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["solver"]["resolution"], 0.125);
}
