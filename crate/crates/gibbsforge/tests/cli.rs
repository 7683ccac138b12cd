//! End-to-end checks of the `gibbsforge` binary: exit codes, output files,
//! determinism, and the CSV/JSON round trip.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gibbsforge")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gibbsforge_cli_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn analyze_passes_with_exit_zero() {
    let dir = temp_dir("analyze_ok");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = doubling\n[run]\nexperiment = analyze\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("hypothesis_report.json")).unwrap();
    assert!(report.contains("\"passes_P\": true"));
    assert!(report.contains("\"p_margin\": \"inf\""));
}

#[test]
fn analyze_condition_p_failure_exits_two() {
    let dir = temp_dir("analyze_fail");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = manneville_pomeau_circle\nparams = 0.25\n\
         [potential]\nname = minus_log_deriv_plus_beta\nparams = 0.1\n\
         [run]\nexperiment = analyze\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report = std::fs::read_to_string(dir.join("hypothesis_report.json")).unwrap();
    assert!(report.contains("\"failing\": [\"P\"]"), "{report}");
}

#[test]
fn gated_experiment_refuses_failing_pair() {
    let dir = temp_dir("gate");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = manneville_pomeau_circle\nparams = 0.25\n\
         [potential]\nname = minus_log_deriv_plus_beta\nparams = 0.1\n\
         [run]\nexperiment = equilibrium\ngrid_n = 256\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // the hypothesis report names the failing condition; no eigendata written
    assert!(dir.join("hypothesis_report.json").exists());
    assert!(!dir.join("eigendata.csv").exists());
}

#[test]
fn config_parse_error_exits_one() {
    let dir = temp_dir("parse_err");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = doubling\nmystery = 3\n[run]\nexperiment = analyze\n",
    );
    let out = Command::new(bin()).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn missing_config_exits_one() {
    let out = Command::new(bin()).arg("/nonexistent/path.cfg").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn equilibrium_summary_matches_recomputed_csv() {
    let dir = temp_dir("equilibrium");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = doubling\n[run]\nexperiment = equilibrium\ngrid_n = 256\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());

    // round trip: parse the eigendata CSV and recompute the summary stats
    let csv = std::fs::read_to_string(dir.join("eigendata.csv")).unwrap();
    let mut total_nu = 0.0;
    let mut h_dot_nu = 0.0;
    for line in csv.lines() {
        if line.starts_with('#') || line.starts_with("midpoint") {
            continue;
        }
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        total_nu += cols[2];
        h_dot_nu += cols[1] * cols[2];
    }
    assert!((total_nu - 1.0).abs() <= 1e-12, "nu not normalized: {total_nu}");
    assert!((h_dot_nu - 1.0).abs() <= 1e-10, "h not nu-normalized: {h_dot_nu}");

    let json = std::fs::read_to_string(dir.join("equilibrium.json")).unwrap();
    assert!(json.contains("\"lambda\": 2"), "{json}");
}

#[test]
fn flag_overrides_and_determinism() {
    let dir_a = temp_dir("det_a");
    let dir_b = temp_dir("det_b");
    let body = "[map]\nname = pitchfork_doubling\nparams = 0.8, 0.05\n\
                [run]\nexperiment = hyptimes\ngrid_n = 256\nsamples = 1000\nn_max = 20\norbit_len = 400\n";
    let cfg_a = write_config(&dir_a, "run.cfg", body);
    let cfg_b = write_config(&dir_b, "run.cfg", body);
    for (cfg, dir) in [(&cfg_a, &dir_a), (&cfg_b, &dir_b)] {
        let out = Command::new(bin())
            .arg(cfg)
            .arg("--output-dir")
            .arg(dir)
            .arg("--seed")
            .arg("77")
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["hyptimes_tail.csv", "hyptimes_summary.json"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} not byte-identical");
    }
    // seed recorded in the metadata header
    let text = std::fs::read_to_string(dir_a.join("hyptimes_tail.csv")).unwrap();
    assert!(text.contains("# seed = 77"));
}

#[test]
fn stoch_sweep_outputs_descending_distances() {
    let dir = temp_dir("stoch");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = doubling\n[run]\nexperiment = stoch-sweep\ngrid_n = 256\nsweep = 0.05, 0.02, 0.01\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let l1: f64 = cols[1].parse().unwrap();
        assert!(l1 <= 1e-8, "doubling stochastic distance {l1}");
    }
}

#[test]
fn stat_sweep_reports_pressures() {
    let dir = temp_dir("stat");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = pitchfork_doubling\nparams = 0.8, 0.05\n\
         [run]\nexperiment = stat-sweep\ngrid_n = 512\nsweep = 0.9, 0.95, 1.0\ngamma = 0.7\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut last_l1 = f64::INFINITY;
    for row in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let l1: f64 = cols[1].parse().unwrap();
        let lambda: f64 = cols[3].parse().unwrap();
        assert!((lambda - 2.0).abs() < 1e-6, "maximal entropy lambda {lambda}");
        assert!(l1 <= last_l1 + 0.01);
        last_l1 = l1;
    }
    assert!(last_l1 <= 1e-9, "distance at the reference member: {last_l1}");
}

#[test]
fn gibbs_experiment_writes_ratio_table() {
    let dir = temp_dir("gibbs");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = doubling\n[run]\nexperiment = gibbs\ngrid_n = 256\nsamples = 50\ndelta = 0.25\nc = 0.05\n",
    );
    let out = Command::new(bin())
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("gibbs_ratios.csv")).unwrap();
    let mut count = 0;
    for row in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let ratio: f64 = cols[2].parse().unwrap();
        assert!((ratio - 0.5).abs() <= 1e-3, "doubling Gibbs ratio {ratio}");
        count += 1;
    }
    assert!(count > 50, "expected a populated ratio table, got {count} rows");
    let json = std::fs::read_to_string(dir.join("gibbs_summary.json")).unwrap();
    assert!(json.contains("\"observed_K\""));
}

#[test]
fn unknown_flag_rejected() {
    let dir = temp_dir("flags");
    let cfg = write_config(
        &dir,
        "run.cfg",
        "[map]\nname = doubling\n[run]\nexperiment = analyze\n",
    );
    let out = Command::new(bin()).arg(&cfg).arg("--bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
