//! Driver-level checks: byte-identical data files on rerun with equal
//! configuration, and sane exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_horizon"))
        .args(args)
        .output()
        .expect("driver runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn sticky_reruns_are_byte_identical() {
    let base = std::env::temp_dir().join(format!("horizon-cli-test-{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "sticky",
            "--seed",
            "424242",
            "--replicas",
            "3",
            "--n-scale",
            "1000",
            "--mu-grid",
            "-1:0.25:1",
            "--x0",
            "0.5",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "sticky failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["sticky_lines.csv", "sticky_epochs.csv", "report.json"] {
        assert_eq!(
            read(&dir_a, name),
            read(&dir_b, name),
            "{name} differs between identical reruns"
        );
    }
    fs::remove_dir_all(&base).ok();
}

#[test]
fn melon_figure_reruns_are_byte_identical() {
    let base = std::env::temp_dir().join(format!("horizon-melon-test-{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "melon-figure",
            "--seed",
            "7",
            "--grid-step",
            "0.02",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "melon-figure failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["melon_packed.csv", "melon_stationary.csv"] {
        assert_eq!(
            read(&dir_a, name),
            read(&dir_b, name),
            "{name} differs between identical reruns"
        );
    }
    fs::remove_dir_all(&base).ok();
}

#[test]
fn identities_exit_zero_and_write_manifest() {
    let base = std::env::temp_dir().join(format!("horizon-id-test-{}", std::process::id()));
    let out = run(&[
        "identities",
        "--seed",
        "99",
        "--out-dir",
        base.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "identities failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = read(&base, "manifest.json");
    let parsed: serde_json::Value = serde_json::from_slice(&manifest).unwrap();
    assert_eq!(parsed["command"], "identities");
    assert_eq!(parsed["checks_total"], parsed["checks_passed"]);
    assert!(parsed["config_hash"].is_u64());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS")));
    fs::remove_dir_all(&base).ok();
}

#[test]
fn bad_flags_exit_nonzero() {
    let out = run(&["sticky", "--mu-grid", "1,0"]);
    assert!(!out.status.success());
}
