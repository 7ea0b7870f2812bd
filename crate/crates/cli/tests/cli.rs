//! End-to-end runs of the `pwdg` binary.

use std::path::Path;
use std::process::{Command, Output};

fn pwdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwdg")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_table_meshes_and_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# small smooth run\ndomain = lshape\norder = 2\nkappa = 6\np = 5\nsubdivisions = 2\nmax_iter = 5\n");
    let out = dir.path().join("out");
    let res = pwdg(&["run", &cfg, "--out", out.to_str().unwrap(), "--max-iter", "2", "--theta", "0.5", "--indicator", "dg"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,dofs,elements,h,rel_l2_error,eta,eta_scaled,efficiency,rcond,seconds"));
    assert_eq!(lines.count(), 3);
    for k in 0..3 {
        assert!(out.join(format!("mesh_{k}.txt")).exists());
        assert!(out.join(format!("solution_{k}.txt")).exists());
    }
    assert!(!out.join("mesh_3.txt").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.cfg", "kapa = 3\n");
    let res = pwdg(&["run", &typo]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("kapa"));
    let ok = write(dir.path(), "ok.cfg", "max_iter = 0\n");
    assert_eq!(pwdg(&["run", &ok, "--theta", "2"]).status.code(), Some(1));
    assert_eq!(pwdg(&["run", &ok, "--indicator", "h1"]).status.code(), Some(1));
    assert_eq!(pwdg(&["run", dir.path().join("missing.cfg").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_two_and_keeps_the_table() {
    // thirty nearly parallel plane waves on elements far below the wavelength
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "domain = unit-square\nsolution = plane-wave\nkappa = 0.01\np = 30\nsubdivisions = 1\n");
    let out = dir.path().join("out");
    let res = pwdg(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("singular"));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}
