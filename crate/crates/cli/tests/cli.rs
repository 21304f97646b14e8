use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn spinmech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinmech")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn table_lists_every_preset() {
    let o = spinmech(&["table"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("label,gamma_inv_s,q_factor"));
    let c = csv_column(&text, "cooperativity");
    assert!((c[4] - 8.0).abs() < 0.4 && (c[1] - 1206.0).abs() < 60.0);
}

#[test]
fn empty_preset_list_gives_header_only() {
    let o = spinmech(&["table", "--preset", ""]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn table_json_is_versioned() {
    let o = spinmech(&["table", "--preset", "table1-row3", "--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"][0]["label"], "table1-row3");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["table", "--preset", "table1-row9"][..],
        &["mc", "--runs", "0"],
        &["mc", "--alpha", "1.5"],
        &["mc", "--config", "/nonexistent/params.toml"],
        &["sweep", "--axis", "c", "--from", "10", "--to", "1", "--points", "3"],
        &["kalman-demo", "--steps-per-period", "5"],
        &["frobnicate"],
    ] {
        let o = spinmech(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = spinmech(&["table", "--preset", "nope"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset"));
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    fs::write(&path, "gamma_inv_s = 0.01\nq_factor = 1e9\nlambda_over_2pi_hz = 880\ntemperature_k = 293\ncolour = 1\n").unwrap();
    let o = spinmech(&["budget", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn monte_carlo_is_byte_reproducible() {
    let a = spinmech(&["mc", "--runs", "3000", "--seed", "11"]);
    let b = spinmech(&["mc", "--runs", "3000", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = spinmech(&["mc", "--runs", "3000", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn monte_carlo_row5_interval_covers_published_error() {
    let o = spinmech(&["mc", "--preset", "table1-row5", "--runs", "100000", "--seed", "5"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let f = &v["result"]["monte_carlo"]["fidelity"];
    let (lo, hi) = (1.0 - f["upper"].as_f64().unwrap(), 1.0 - f["lower"].as_f64().unwrap());
    assert!(lo <= 0.28 && 0.28 <= hi, "[{lo}, {hi}]");
}

#[test]
fn file_output_gets_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let o = spinmech(&["mc", "--runs", "500", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let data: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(data["command"], "mc");
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "mc");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["n_runs"], 500);
    assert_eq!(m["parameter_source"], "preset:table1-row5");
    assert_eq!(m["outputs"][0], out.to_str().unwrap());
    assert!(m["timestamp_unix_s"].as_u64().unwrap() > 0);
}

#[test]
fn kalman_demo_converges_within_five_periods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lowq.toml");
    fs::write(&cfg, "gamma_inv_s = 0.01\nq_factor = 1e4\nlambda_over_2pi_hz = 880\ntemperature_k = 293\ndelta_m_sq = 27\n").unwrap();
    let out = dir.path().join("k.csv");
    let o = spinmech(&[
        "kalman-demo", "--config", cfg.to_str().unwrap(), "--duration", "5", "--power-mw", "10", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let trace = csv_column(&text, "trace");
    let ss = csv_column(&text, "trace_steady_state");
    assert_eq!(trace.len(), 501);
    assert!((trace.last().unwrap() / ss[0] - 1.0).abs() < 0.05);
    assert!(trace[0] > 10.0 * ss[0]);
    assert!(dir.path().join("k.csv.manifest.json").exists());
}

#[test]
fn kalman_demo_without_light_stays_thermal() {
    let o = spinmech(&["kalman-demo", "--duration", "2", "--power-mw", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let trace = csv_column(&stdout(&o), "trace");
    assert!(trace.iter().all(|t| (t / trace[0] - 1.0).abs() < 1e-9));
    assert!(trace[0] > 1e6);
}

#[test]
fn sweep_single_point_and_peak() {
    let o = spinmech(&["sweep", "--axis", "c", "--from", "100", "--to", "100", "--points", "1"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(csv_column(&text, "fidelity")[0] > 0.96);
}

#[test]
fn fidelity_versus_time_peaks_at_optimum() {
    let o = spinmech(&["sweep", "--axis", "t", "--preset", "table1-row5", "--from", "0.01", "--to", "3", "--points", "300", "--log"]);
    let text = stdout(&o);
    let f = csv_column(&text, "fidelity");
    let gt = csv_column(&text, "gamma_t");
    let (imax, _) = f.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    // Row 5 optimum t* = 3.14 ms with 1/Γ = 10 ms.
    assert!((gt[imax] - 0.314).abs() < 0.02, "{}", gt[imax]);
}

#[test]
fn error_approaches_asymptote_at_large_c() {
    let o = spinmech(&["sweep", "--axis", "c", "--from", "1e3", "--to", "1e7", "--points", "5", "--log"]);
    let text = stdout(&o);
    let e = csv_column(&text, "error");
    let a = csv_column(&text, "asymptote");
    let gaps: Vec<f64> = e.iter().zip(&a).map(|(e, a)| (e / a - 1.0).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps.last().unwrap() < &0.05);
}

#[test]
fn budget_curve_floors_at_twice_cnot_error() {
    let o = spinmech(&["budget", "--curve", "--c-from", "1e8", "--c-to", "1e8", "--c-points", "1"]);
    let e = csv_column(&stdout(&o), "e_total")[0];
    assert!((e / 2e-4 - 1.0).abs() < 0.01);
}

#[test]
fn budget_json_for_preset() {
    let o = spinmech(&["budget", "--preset", "table1-row5", "--literature-defaults"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v["result"];
    assert!(r["e_total"].as_f64().unwrap() > r["e_bell"].as_f64().unwrap());
    assert!(r["e_nuc"].as_f64().unwrap() < 0.01 * r["e_bell"].as_f64().unwrap());
}
