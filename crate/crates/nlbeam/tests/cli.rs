use std::path::Path;
use std::process::{Command, Output};

fn nlbeam(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlbeam")).args(args).current_dir(cwd).output().unwrap()
}

#[test]
fn generate_run_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = nlbeam(&["generate", "square-frame", "--segments", "10", "-o", "square.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = nlbeam(&["run", "square.json", "--out", "res"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "16 of 16 steps converged");
    let history = std::fs::read_to_string(d.join("res/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 17);
    assert!(d.join("res/shapes.csv").exists() && d.join("res/eigen.csv").exists());

    let out = nlbeam(&["sweep", "square.json", "--param", "elements.*.N=8,12"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("sweep/elements.*.N=8/history.csv").exists());
    assert!(d.join("sweep/elements.*.N=12/history.csv").exists());
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), r#"{"nodes": [[0, 0]], "elements": [], "bogus": 1}"#).unwrap();
    let out = nlbeam(&["run", "bad.json"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    // One huge step of the stiff square frame cannot converge in two iterations.
    let out = nlbeam(&["generate", "square-frame", "--ea", "10000", "-o", "stiff.json"], d);
    assert!(out.status.success());
    let text = std::fs::read_to_string(d.join("stiff.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["solver"]["steps"] = 1.into();
    doc["solver"]["max_iter"] = 2.into();
    std::fs::write(d.join("stiff.json"), doc.to_string()).unwrap();
    let out = nlbeam(&["run", "stiff.json", "--out", "res"], d);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 of 1 steps converged"));
}
