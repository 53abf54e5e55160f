//! End-to-end runs of the `bench` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>().join(","),
        "method,distribution,param,p,N,seed,build_ms,compute_ms,checksum,pairs"
    );
    r.records().map(Result::unwrap).collect()
}

#[test]
fn verified_run_has_equal_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = bench(&["--dist", "uniform", "--beta", "4", "--p", "2", "--methods", "grid,aabb", "--verify", "--reps", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "grid");
    assert_eq!(&rows[1][0], "aabb");
    assert_eq!(rows[0][8], rows[1][8]);
    assert_eq!(&rows[0][4], "128");
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("| aabb | uniform | 4 | 2 | 128 |"), "{stdout}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("ChaCha8, seed 1"));
}

#[test]
fn all_methods_on_surface() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = bench(&["--dist", "surface", "--alpha", "8", "--p", "1", "--methods", "all", "--reps", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = rows(&out);
    let names: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(names, ["sphere", "squares", "aabb", "aabb-sorted", "grid"]);
    assert!(rows.iter().all(|r| r[8] == rows[0][8] && &r[1] == "surface"));
    for r in &rows {
        assert!(r[6].parse::<f64>().unwrap() >= 0.0 && r[7].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn save_load_round_trip_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let particles = dir.path().join("p.csv");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let img = dir.path().join("r.pgm");
    let o = bench(&["--beta", "4", "--p", "1", "--methods", "squares", "--reps", "1", "--save", particles.to_str().unwrap(), "--out", a.to_str().unwrap(), "--render", img.to_str().unwrap(), "--render-size", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bench(&["--load", particles.to_str().unwrap(), "--cutoff", "0.25", "--methods", "squares", "--reps", "1", "--verify", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&a)[0][8], rows(&b)[0][8]);
    assert_eq!(&rows(&b)[0][1], "file");
    let bytes = std::fs::read(img).unwrap();
    assert!(bytes.starts_with(b"P5\n32 32\n255\n"));
    assert_eq!(bytes.len(), 13 + 32 * 32);
    assert!(bytes[13..].iter().any(|&p| p > 0));
}

#[test]
fn bad_flags_fail() {
    assert!(!bench(&["--methods", "cube"]).status.success());
    assert!(!bench(&["--beta", "4", "--alpha", "4"]).status.success());
    assert!(!bench(&["--load", "x.csv"]).status.success());
    assert!(!bench(&["--beta", "2,4", "--save", "/dev/null", "--methods", "grid", "--reps", "1"]).status.success());
    assert!(!bench(&["--beta", "2", "--reps", "0", "--methods", "grid"]).status.success());
}

#[test]
fn oracle_cap_is_an_error_under_verify() {
    // 48³ = 110592 particles, above the oracle's cap
    let o = bench(&["--beta", "48", "--p", "1", "--methods", "grid", "--reps", "1", "--verify"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle is capped"));
}
