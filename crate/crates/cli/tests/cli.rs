//! Process-level checks of the binary: exit codes, CSV on stdout, byte-equal
//! reruns, grid dumps.

use std::process::Command;

fn crossway() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crossway"))
}

#[test]
fn identical_invocations_produce_identical_csv() {
    let run = || {
        let out = crossway()
            .args([
                "--approach",
                "coop",
                "--vehicles",
                "15",
                "--steps",
                "200",
                "--runs",
                "2",
                "--seed",
                "5",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("approach,run,seed"));
    assert_eq!(text.lines().count(), 1 + 2 + 1);
}

#[test]
fn invalid_sponsorship_fails_with_usage() {
    let out = crossway()
        .args(["--approach", "comp", "--sponsorship", "30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("sponsorship"));
    assert!(err.contains("usage:"));
}

#[test]
fn unknown_flag_fails_with_usage() {
    let out = crossway().args(["--bogus", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("usage:"));
}

#[test]
fn grid_dump_lists_all_edges() {
    let dir = std::env::temp_dir().join("crossway-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grid.txt");
    let out = crossway()
        .args(["--dump-grid", path.to_str().unwrap(), "--grid", "5x5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 80);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 3));
}

#[test]
fn trace_writes_per_step_lines() {
    let dir = std::env::temp_dir().join("crossway-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.log");
    let out = crossway()
        .args([
            "--approach",
            "eb",
            "--vehicles",
            "3",
            "--steps",
            "10",
            "--runs",
            "1",
            "--trace",
            path.to_str().unwrap(),
            "--out",
            dir.join("t.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    // header + 3 vehicles x 10 steps
    assert_eq!(text.lines().count(), 1 + 30);
}
