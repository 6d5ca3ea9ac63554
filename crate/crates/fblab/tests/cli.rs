use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fblab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fblab"))
        .args(args)
        .current_dir(dir)
        .env_remove("FBLAB_WORKERS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A coarse dam that solves in well under a second.
const SMALL: &str = "extends = dam-p2\nname = small\n[domain]\nn = 41\n";

fn small_config(dir: &TempDir) -> String {
    let path = dir.path().join("small.cfg");
    fs::write(&path, SMALL).unwrap();
    path.display().to_string()
}

#[test]
fn validate_accepts_builtins() {
    let dir = TempDir::new().unwrap();
    let o = fblab(&["validate", "dam-p2"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout)
        .trim_end()
        .ends_with("ok"));
}

#[test]
fn config_errors_exit_3_and_name_the_line() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("extends = dam-p2\n\n[solver]\nomega = fast\n", "line 4"),
        ("extends = dam-p2\nsolver.omgea = 0.5\n", "line 2"),
        ("extends = dam-p2\n[a\n", "line 2"),
        ("name = x\nname = y\n", "line 2"),
    ];
    for (text, needle) in cases {
        let path = dir.path().join("bad.cfg");
        fs::write(&path, text).unwrap();
        let o = fblab(&["validate", path.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 3, "{text}");
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let o = fblab(&["validate", "no-such-scenario"], dir.path());
    assert_eq!(code(&o), 3);
    let o = fblab(&["frobnicate"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn inadmissible_operator_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p1.cfg");
    fs::write(&path, "extends = dam-p2\na.p = 1\n").unwrap();
    let o = fblab(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("ellipticity"), "{}", stderr(&o));
}

#[test]
fn solver_failure_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("short.cfg");
    fs::write(&path, format!("{SMALL}solver.max_outer = 1\n")).unwrap();
    let o = fblab(&["solve", path.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn solve_writes_artifacts_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(&dir);
    let a = fblab(&["solve", &cfg, "--out", "a"], dir.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = Command::new(env!("CARGO_BIN_EXE_fblab"))
        .args(["solve", &cfg, "--out", "b"])
        .current_dir(dir.path())
        .env("FBLAB_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    for f in ["u.field", "chi.field", "profile.csv", "chart.csv"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    for f in ["u.svg", "orbits.svg"] {
        let s = fs::read_to_string(dir.path().join("a").join(f)).unwrap();
        assert!(s.starts_with("<svg") && s.contains("<polyline"), "{f}");
    }
}

#[test]
fn verify_and_report_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(&dir);
    let o = fblab(&["verify", &cfg, "--out", "v"], dir.path());
    assert_eq!(
        code(&o),
        0,
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        stderr(&o)
    );
    for f in [
        "summary.csv",
        "barriers.csv",
        "continuity.csv",
        "v_eps.field",
        "u.field",
    ] {
        assert!(dir.path().join("v").join(f).is_file(), "missing {f}");
    }
    let r = fblab(&["report", "v"], dir.path());
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains(" 0 failed"));
    let r = fblab(&["report", "nowhere"], dir.path());
    assert_eq!(code(&r), 3);
}

#[test]
fn only_filters_modules_and_skips_the_solve() {
    let dir = TempDir::new().unwrap();
    let o = fblab(
        &["verify", "dam-p3", "--only", "a_operator", "--out", "v"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("v/summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let expect = if cells[1] == "a_operator" {
            "pass"
        } else {
            "skip"
        };
        assert_eq!(cells[3], expect, "{line}");
    }
    assert!(!dir.path().join("v/u.field").exists());
    let o = fblab(&["verify", "dam-p3", "--only", "nonsense"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn negative_fixture_fails_verification() {
    let dir = TempDir::new().unwrap();
    let o = fblab(
        &["verify", "island", "--only", "free_boundary", "--out", "v"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(
        out.lines()
            .any(|l| l.starts_with("level-structure") && l.contains("fail")),
        "{out}"
    );
    assert_eq!(code(&fblab(&["report", "v"], dir.path())), 1);
}

#[test]
fn worker_count_must_be_positive() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fblab"))
        .args(["validate", "dam-p2"])
        .env("FBLAB_WORKERS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
}
