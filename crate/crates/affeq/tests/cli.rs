//! End-to-end checks of the `affeq` binary: exit codes, report files, and
//! the descent demo output.

use std::process::{Command, Output};

fn affeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affeq"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn passing_check_exits_zero_and_prints_reports() {
    let out = affeq(&[
        "check", "--suite", "quadrature", "--trials", "10", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON report array");
    let reports = reports.as_array().expect("array of reports");
    assert!(!reports.is_empty());
    for r in reports {
        assert_eq!(r["seed"], 7);
        assert_eq!(r["trials"], 10);
        assert!(r["violations"].as_array().expect("violations array").is_empty());
    }
}

#[test]
fn violations_exit_one() {
    let out = affeq(&[
        "check",
        "--suite",
        "integrators",
        "--classes",
        "injective",
        "--algorithms",
        "divmod",
        "--dims",
        "1:2",
        "--trials",
        "5",
        "--seed",
        "42",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(affeq(&["check", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(affeq(&["check", "--dims", "2x1"]).status.code(), Some(2));
    assert_eq!(
        affeq(&["check", "--classes", "diagonal"]).status.code(),
        Some(2)
    );
    assert_eq!(
        affeq(&["demo-descend", "--dims", "1:2"]).status.code(),
        Some(2)
    );
}

#[test]
fn out_directory_receives_byte_identical_reports() {
    let dir1 = std::env::temp_dir().join("affeq-cli-out-1");
    let dir2 = std::env::temp_dir().join("affeq-cli-out-2");
    for dir in [&dir1, &dir2] {
        let _ = std::fs::remove_dir_all(dir);
        let out = affeq(&[
            "check",
            "--suite",
            "interpolation",
            "--classes",
            "bijective",
            "--trials",
            "10",
            "--seed",
            "42",
            "--out",
            dir.to_str().expect("utf-8 temp path"),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir1.join("interpolation.json")).expect("report written");
    let b = std::fs::read(dir2.join("interpolation.json")).expect("report written");
    assert!(!a.is_empty());
    assert_eq!(a, b, "reports differ between identical runs");
    let _ = std::fs::remove_dir_all(&dir1);
    let _ = std::fs::remove_dir_all(&dir2);
}

#[test]
fn demo_descend_reports_small_deviation() {
    let out = affeq(&[
        "demo-descend", "--method", "rk4", "--dims", "3:2", "--steps", "50", "--h", "0.01",
        "--seed", "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).expect("utf-8 output");
    let last = stdout
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .expect("nonempty output");
    let value: f64 = last
        .strip_prefix("max_deviation=")
        .expect("final line is max_deviation=<value>")
        .parse()
        .expect("parseable deviation");
    assert!(value <= 1e-8, "deviation {value}");
}
