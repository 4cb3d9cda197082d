//! End-to-end runs of the `sqicube` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sqicube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqicube"))
        .args(args)
        .env("SQICUBE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn empty_n_list_is_a_usage_error() {
    let out = sqicube(&["run", "--example", "1", "--N", ""]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = sqicube(&["run", "--example", "1", "--N", ",,"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_with_two() {
    for args in [
        vec!["run", "--example", "5"],
        vec!["run", "--d", "2", "--p", "2", "--integrand", "jacobian"],
        vec!["run", "--example", "2", "--pipeline", "sideways"],
        vec!["run", "--example", "2", "--metric", "1,2"],
        vec!["run", "--example", "2", "--N", "1"],
    ] {
        let out = sqicube(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn exactness_example_passes_its_check() {
    let out = sqicube(&["run", "--example", "1", "--check"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("EXACTNESS PASS"), "{}", stderr(&out));
    let csv = stdout(&out);
    assert!(csv.starts_with("N,errmax1,o1,errmax2,o2,errmax3,o3\n"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn shipped_golden_tables_match() {
    for (e, d, p) in [("2", "2", "2"), ("3", "3", "3"), ("4", "2", "2")] {
        let out = sqicube(&["check", "--example", e, "--d", d, "--p", p]);
        assert!(out.status.success(), "example {e} d{d} p{p}: {}", stderr(&out));
        assert!(stderr(&out).contains("GOLDEN PASS"));
    }
}

#[test]
fn perturbed_golden_names_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.csv");
    let base = stdout(&sqicube(&["run", "--example", "2"]));
    let mut lines: Vec<String> = base.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[2].split(',').map(String::from).collect();
    assert_eq!(cells[0], "8");
    let v: f64 = cells[5].parse().unwrap();
    cells[5] = format!("{:e}", 10.0 * v);
    lines[2] = cells.join(",");
    std::fs::write(&golden, lines.join("\n") + "\n").unwrap();

    let out = sqicube(&["check", "--example", "2", "--golden", golden.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("MISMATCH N=8 errmax3"), "{err}");
    assert!(err.contains("GOLDEN FAIL"));
}

#[test]
fn out_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("nested/ex2.csv");
    let out = sqicube(&["run", "--example", "2", "--p", "3", "--N", "6,8", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 3);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&csv).with_extension("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["p"], 3);
    assert_eq!(meta["qi_scheme"], "truncated-cardinal-inverse");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn config_files_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "[experiment]\nexample = 2\nd = 3\np = 3\nN = [6, 8, 10]\n\n[quadrature]\ngauss_order = 16\n",
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let out = sqicube(&["run", "--config", cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 4);
    let out = sqicube(&["run", "--config", cfg, "--N", "6"]);
    assert_eq!(stdout(&out).lines().count(), 2);

    std::fs::write(&path, "[experiment]\nexample = 2\nbogus = 1\n").unwrap();
    let out = sqicube(&["run", "--config", cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn oracle_subcommand_reproduces_the_shipped_table() {
    let shipped = stdout(&sqicube(&["run", "--example", "2", "--N", "6,10"]));
    let fresh = stdout(&sqicube(&["oracle", "--example", "2", "--N", "6,10"]));
    assert_eq!(shipped, fresh);
}
