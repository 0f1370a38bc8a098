use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn fhpmip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhpmip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    fhpmip(&args)
}

fn report_rows(out: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(out.join("report.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const SIM_LOSS: usize = 7;

#[test]
fn timely_corridor_passes_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenario("corridor.ini"), dir.path(), &["--check"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = report_rows(dir.path());
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[SIM_LOSS] == "0" && r[10] == "true"));
    for file in ["metrics.csv", "trace.jsonl", "report.csv"] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = simulate(
            &scenario("corridor_untimely.ini"),
            d.path(),
            &["--seed", "7"],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    for file in ["metrics.csv", "trace.jsonl", "report.csv"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between runs");
    }
}

#[test]
fn protocol_flag_overrides_the_file() {
    let (fast, base) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = scenario("corridor_untimely.ini");
    assert!(simulate(&cfg, fast.path(), &[]).status.success());
    assert!(simulate(&cfg, base.path(), &["--protocol", "pmipv6"])
        .status
        .success());
    let (f, b) = (report_rows(fast.path()), report_rows(base.path()));
    assert_eq!(f.len(), b.len());
    assert!(b.iter().all(|r| r[1] == "pmipv6"));
    for (f, b) in f.iter().zip(&b) {
        let (lf, lb): (u64, u64) = (f[SIM_LOSS].parse().unwrap(), b[SIM_LOSS].parse().unwrap());
        assert!(lf <= lb, "fast handover lost {lf}, baseline {lb}");
    }
}

#[test]
fn oracle_mismatch_exits_3_but_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenario("corridor_untimely.ini"), dir.path(), &["--check"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("report.csv").is_file());
}

#[test]
fn bad_config_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("corridor.ini")).unwrap();
    let bad = dir.path().join("bad.ini");
    fs::write(&bad, text.replace("n = 3", "n = 0")).unwrap();
    let out_dir = dir.path().join("out");
    let out = simulate(&bad, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 1"));
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&dir.path().join("nope.ini"), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analytic_prints_oracle_values() {
    let out = fhpmip(&[
        "analytic",
        "--n",
        "3",
        "--d-smag-ap",
        "5ms",
        "--d-mag-mag",
        "20ms",
        "--t-u-pred",
        "10ms",
        "--d-s-pbu",
        "4ms",
        "--d-s-pback",
        "4ms",
        "--d-l2",
        "6ms",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in [
        "ho_pl_us = 45000",
        "avg_ho_pl_us = 15000",
        "ho_lat_us = 30000",
        "avg_ho_lat_us = 10000",
        "signaling_total = 8",
    ] {
        assert!(
            text.lines().any(|l| l == line),
            "missing `{line}` in\n{text}"
        );
    }
    assert_eq!(fhpmip(&["analytic", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let grid = scenario("corridor_grid.ini");
    let out = fhpmip(&[
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = report_rows(dir.path());
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][0], "n=1;protocol=pmipv6;t_u_pred=0s");
    assert_eq!(rows[11][0], "n=3;protocol=fhpmipv6;t_u_pred=20ms");
}
