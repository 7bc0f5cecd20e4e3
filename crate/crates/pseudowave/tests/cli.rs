use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pseudowave::csvio::{read_rows, write_rows, EigenRow, FitRow, PseudomodeRow, ScanRow, SigmaRow, SweepRow};

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn pseudowave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudowave")).args(args).output().unwrap()
}

fn run(mode: &str, config: &Path, out: &Path, workers: usize) -> Output {
    pseudowave(&[
        mode,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        &workers.to_string(),
    ])
}

/// Reads `path` with schema `T`, rewrites it and compares bytes.
fn assert_round_trip<T: serde::Serialize + serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    let rows: Vec<T> = read_rows(path).unwrap();
    let copy = path.with_extension("copy");
    write_rows(&copy, &rows).unwrap();
    assert_eq!(std::fs::read(path).unwrap(), std::fs::read(&copy).unwrap(), "{}", path.display());
    rows
}

const SWEEP: &str = r#"{
  "mode": "sweep",
  "damping": {"family": "monomial", "p": 2},
  "potential": {"family": "zero"},
  "n": 3,
  "epsilon": 0.1,
  "beta": {"curve": "power", "s": 1},
  "b_list": [8, 12, 16, 24, 32]
}"#;

#[test]
fn sweep_writes_five_rows_and_a_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", SWEEP);
    let out = dir.path().join("out");
    let res = run("sweep", &cfg, &out, 2);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<SweepRow> = assert_round_trip(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
    assert!(rows.iter().all(|r| r.n == 3 && r.beta == r.b));
    let fit: Vec<FitRow> = assert_round_trip(&out.join("sweep_fit.csv"));
    assert_eq!(fit.len(), 1);
    assert_eq!(fit[0].axis, "log_b");
    assert!(fit[0].slope < -6.0);
}

#[test]
fn sweep_output_is_bit_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", SWEEP);
    let runs: Vec<Vec<u8>> = [1, 3, 1]
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let out = dir.path().join(format!("out{i}"));
            assert!(run("sweep", &cfg, &out, k).status.success());
            std::fs::read(out.join("sweep.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn spectrum_contains_the_first_explicit_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "spectrum.json",
        r#"{"damping": {"family": "monomial", "p": 2}, "half_length": 12, "nodes": 600}"#,
    );
    let out = dir.path().join("out");
    let res = run("spectrum", &cfg, &out, 1);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<EigenRow> = assert_round_trip(&out.join("spectrum.csv"));
    assert_eq!(rows.len(), 1200);
    for im in [1.091124, -1.091124] {
        let target = (-0.629961f64, im);
        let norm = (target.0 * target.0 + target.1 * target.1).sqrt();
        assert!(rows.iter().any(|r| ((r.re - target.0).powi(2) + (r.im - target.1).powi(2)).sqrt() <= 0.05 * norm));
    }
}

#[test]
fn pseudomode_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pm.json",
        r#"{"damping": {"family": "monomial", "p": 2}, "potential": {"family": "monomial", "p": 1},
            "n": 2, "b": 10, "beta_value": 5}"#,
    );
    let out = dir.path().join("out");
    let res = run("pseudomode", &cfg, &out, 1);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<PseudomodeRow> = assert_round_trip(&out.join("pseudomode.csv"));
    let anchor = rows.iter().find(|r| r.x == 10.0).unwrap();
    assert!((anchor.abs_g - 1.0).abs() < 1e-14 && anchor.xi == 1.0);
    assert!(rows.first().unwrap().xi == 0.0 && rows.last().unwrap().xi == 0.0);
    let report: Vec<SweepRow> = assert_round_trip(&out.join("report.csv"));
    assert_eq!((report[0].b, report[0].alpha, report[0].beta, report[0].n), (10.0, 100.0, 5.0, 2));
    assert!(report[0].ratio > 0.0 && report[0].resolvent_lower_bound == 1.0 / report[0].ratio);
}

#[test]
fn pseudospec_scan_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ps.json",
        r#"{"damping": {"family": "monomial", "p": 2}, "half_length": 8, "nodes": 200,
            "scan": {"re_min": -4, "re_max": 2, "im_min": 0.5, "im_max": 2, "nx": 4, "ny": 3}}"#,
    );
    let out = dir.path().join("out");
    let res = run("pseudospec", &cfg, &out, 2);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let meta: Vec<ScanRow> = assert_round_trip(&out.join("pseudospec_grid.csv"));
    assert_eq!((meta[0].nx, meta[0].ny, meta[0].method.as_str()), (4, 3, "structured"));
    let rows: Vec<SigmaRow> = assert_round_trip(&out.join("pseudospec.csv"));
    assert_eq!(rows.len(), 12);
    assert_eq!((rows[1].re, rows[1].im), (-2.0, 0.5));
    assert_eq!((rows[4].re, rows[4].im), (-4.0, 1.25));
    // −G is accretive: σ_min ≥ Re λ on the right
    assert!(rows.iter().filter(|r| r.re > 0.0).all(|r| r.sigma_min >= r.re * (1.0 - 1e-9)));
}

#[test]
fn empty_b_list_is_a_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.json", r#"{"damping": {"family": "monomial", "p": 2}, "b_list": []}"#);
    let out = dir.path().join("out");
    let res = run("sweep", &cfg, &out, 1);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), "bad.json", "{\"damping\": {\"family\": \"monomial\", \"p\": 2},\n \"typo\": 1}");
    let res = run("sweep", &bad, &out, 1);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
    assert_eq!(run("sweep", &dir.path().join("missing.json"), &out, 1).status.code(), Some(1));
    let wrong_mode = write_config(dir.path(), "mode.json", SWEEP);
    assert_eq!(run("spectrum", &wrong_mode, &out, 1).status.code(), Some(1));
    // ζ(b) = α² + 1 − b⁵ < 0 puts the turning point on the branch cut
    let cut = write_config(
        dir.path(),
        "cut.json",
        r#"{"damping": {"family": "monomial", "p": 2}, "potential": {"family": "monomial", "p": 5},
            "beta": {"curve": "constant", "value": 1}, "b_list": [8, 12, 16]}"#,
    );
    let res = run("sweep", &cut, &out, 1);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("q0"));
    assert!(!out.exists());
    assert_eq!(pseudowave(&["sweep"]).status.code(), Some(1));
    assert_eq!(pseudowave(&["frobnicate", "--config", "x.json"]).status.code(), Some(1));
    assert_eq!(pseudowave(&["--help"]).status.code(), Some(0));
}

#[test]
fn selftest_subset_passes_and_reports_each_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "st.json", r#"{"criteria": [4, 6, 10]}"#);
    let res = pseudowave(&["selftest", "--config", cfg.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(res.status.code(), Some(0), "{stdout}");
    for id in ["04", "06", "10"] {
        assert!(stdout.contains(&format!("criterion {id} ")), "{stdout}");
    }
    assert!(stdout.contains("3/3 criteria passed"));
    let bad = write_config(dir.path(), "st_bad.json", r#"{"criteria": [11]}"#);
    assert_eq!(pseudowave(&["selftest", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
}
