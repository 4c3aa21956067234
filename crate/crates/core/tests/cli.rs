use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = "atoms = 2\ntrajectories = 40\nt_final = 4 us\nrecord_every = 20\ntemperature = 0 uK\n";

fn simulate(dir: &Path, config: &str, extra: &[&str]) -> (Output, String) {
    let cfg = dir.join("run.cfg");
    let out = dir.join("out.csv");
    std::fs::write(&cfg, config).unwrap();
    let _ = std::fs::remove_file(&out);
    let output = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, std::fs::read_to_string(&out).unwrap_or_default())
}

#[test]
fn unknown_key_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv) = simulate(dir.path(), "atoms = 2\n\nwobble = 3\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");
    assert!(csv.is_empty());
}

#[test]
fn successful_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{QUICK}max_doublings = 3\ntail_fraction = 0.5\n");
    let (out, csv) = simulate(dir.path(), &config, &["--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<_> = csv.split('\n').collect();
    assert_eq!(lines.len(), 3, "{csv:?}");
    assert_eq!(
        lines[0],
        "param,fr_with,fr_with_err,fr_without,fr_without_err,converged_with,converged_without,pmulti_max"
    );
    assert!(lines[2].is_empty() && !csv.contains('\r'));
    let fields: Vec<_> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 8);
    for f in &fields[1..5] {
        let v: f64 = f.parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn unconverged_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = "atoms = 2\ntrajectories = 20\nt_final = 0.5 us\nrecord_every = 5\nmax_doublings = 0\n";
    let (out, csv) = simulate(dir.path(), config, &["--no-control"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<_> = row.split(',').collect();
    assert!(fields[1].is_empty() && fields[5].is_empty());
    assert_eq!(fields[6], "false");
}

#[test]
fn oracle_mode_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = "atoms = 2\nt_final = 1 us\nrecord_every = 10\nmax_doublings = 0\ntemperature = 0 uK\n";
    let (out, csv) = simulate(dir.path(), config, &["--oracle", "--basis", "full"]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
    let fields: Vec<_> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[2], "0");
    assert_eq!(fields[4], "0");
}
