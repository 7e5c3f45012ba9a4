use std::fs;
use std::path::Path;
use std::process::Command;

use pswl::{ExperimentConfig, ExperimentReport};

const SMALL: &str = r#"
policy = "ps-wl"
scaling_scheme = "RR"
k_o = 3
k_s = 1

[initial_wear]
target_probability = 1e-4

[workload]
source = "synthetic"
op_count = 20000
inter_arrival_us = 5000.0
"#;

fn pswl(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pswl")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> ExperimentReport {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = put(tmp.path(), "ok.toml", SMALL);
    assert_eq!(pswl(&["validate", "--config", &ok]).0, 0);

    let bad = put(tmp.path(), "bad.toml", &SMALL.replace("\"RR\"", "\"FastScale\"\nraid_level = \"RAID5\""));
    let (code, err) = pswl(&["validate", "--config", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("FastScale") && err.contains("RAID5"), "{err}");

    let typo = put(tmp.path(), "typo.toml", &SMALL.replace("k_s = 1", "k_s = 1\nk_ss = 2"));
    assert_eq!(pswl(&["validate", "--config", &typo]).0, 2);
}

#[test]
fn run_writes_report_and_series_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = put(tmp.path(), "c.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(pswl(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(pswl(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]).0, 0);
    for f in ["report.json", "series.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    // the echoed config validates and reproduces the run
    let r = report(&a);
    r.config.validate().unwrap();
    let again = pswl::sim::run(&r.config).unwrap();
    assert_eq!(again.to_json(), fs::read_to_string(a.join("report.json")).unwrap());

    let c = tmp.path().join("c");
    assert_eq!(pswl(&["run", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "9"]).0, 0);
    assert_eq!(report(&c).seed, 9);
}

#[test]
fn unreachable_convergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("op_count = 20000", "op_count = 0").replace("k_s = 1", "k_s = 1\nrun_until = \"converged\"");
    let cfg = put(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("o");
    assert_eq!(pswl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).0, 3);
    assert!(out.join("report.json").is_file());
}

#[test]
fn sweep_cells_match_standalone_runs() {
    let tmp = tempfile::tempdir().unwrap();
    put(tmp.path(), "base.toml", SMALL);
    let matrix = put(
        tmp.path(),
        "m.toml",
        "base = \"base.toml\"\n[axes]\nscaling_scheme = [\"RR\", \"SDM\"]\npolicy = [\"ps-wl\", \"swans\"]\n",
    );
    let out = tmp.path().join("sweep");
    assert_eq!(pswl(&["sweep", "--matrix", &matrix, "--out", out.to_str().unwrap(), "--jobs", "2"]).0, 0);

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let dir = out.join(cols[0]);
        let r = report(&dir);
        assert_eq!(cols[12].parse::<u64>().unwrap(), r.total_io);
        assert_eq!(cols[11].parse::<u64>().unwrap(), r.wl_trigger_count);
        assert_eq!(cols[9].parse::<f64>().unwrap(), r.lifetime_stddev);

        // rerun the cell on its own through the CLI
        let solo = tmp.path().join(format!("solo_{}", cols[0]));
        let cfg = dir.join("config.toml");
        assert_eq!(pswl(&["run", "--config", cfg.to_str().unwrap(), "--out", solo.to_str().unwrap()]).0, 0);
        assert_eq!(fs::read(solo.join("report.json")).unwrap(), fs::read(dir.join("report.json")).unwrap());
        let cfg: ExperimentConfig = ExperimentConfig::load(&cfg).unwrap();
        assert_eq!(cfg, r.config);
    }
}

#[test]
fn broken_matrix_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let matrix = put(tmp.path(), "m.toml", "[axes]\npolicy = [\"ps-wl\"]\n");
    let out = tmp.path().join("o");
    assert_eq!(pswl(&["sweep", "--matrix", &matrix, "--out", out.to_str().unwrap()]).0, 2);
}
