//! End-to-end runs of the `sle-kappa` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sle-kappa"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sle-kappa")
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn zero_trace_ends_at_two_i() {
    let out = stdout(&["trace", "--driver", "zero", "--points", "8"]);
    assert!(out.starts_with("# sle-kappa "));
    assert!(out.contains("# driver=zero"));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 9);
    let last: Vec<f64> = rows[8].iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!(last[1].abs() < 1e-9);
    assert!((last[2] - 2.0).abs() < 1e-3);
}

#[test]
fn brownian_trace_is_reproducible() {
    let args = ["trace", "--seed", "42", "--kappa", "1,2", "--level", "14", "--points", "64"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    assert_eq!(data_rows(&a).len(), 2 * 65);
    let other = stdout(&["trace", "--seed", "43", "--kappa", "1,2", "--level", "14", "--points", "64"]);
    assert_ne!(a, other);
}

#[test]
fn driving_file_round_trip_reproduces_trace() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("w.txt");
    let s = saved.to_str().unwrap();
    let direct = stdout(&["trace", "--seed", "5", "--level", "10", "--points", "16", "--save-driving", s]);
    let replay = stdout(&["trace", "--driving-file", s, "--points", "16"]);
    let a = data_rows(&direct);
    let b = data_rows(&replay);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[..3], y[..3]);
    }
}

#[test]
fn invalid_parameters_exit_2() {
    for args in [
        &["trace", "--kappa", "-1"][..],
        &["trace", "--level", "31"],
        &["moment-scan", "--beta", "1.5"],
        &["exponents", "--kappa-min", "2", "--kappa-max", "1"],
        &["no-such-command"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["trace", "--kappa", "-1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--kappa"));
}

#[test]
fn missing_driving_file_exits_4() {
    let o = run(&["trace", "--driving-file", "/nonexistent/driving.txt"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn exponent_table_rows() {
    let out = stdout(&["exponents", "--kappa", "0,1,4"]);
    let rows = data_rows(&out);
    // the two critical values are always appended
    assert_eq!(rows.len(), 5);
    let zero = &rows[0];
    assert_eq!(zero[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(zero[4].parse::<f64>().unwrap(), 1.0);
    assert_eq!(zero[6].parse::<f64>().unwrap(), 1.0);
    let k0: f64 = rows[2][0].parse().unwrap();
    assert!((k0 - 8.0 * (2.0 - 3f64.sqrt())).abs() < 1e-12);
    let four = &rows[3];
    assert_eq!(four[1], "no-solution");
    assert_eq!(four[5], "no-solution");
    let one: Vec<f64> = rows[1].iter().map(|c| c.parse().unwrap()).collect();
    assert!(one[5] >= one[4] - 1e-9);
}

#[test]
fn identical_kappas_give_zero_ratio() {
    let v = json(&["verify-bounds", "--kappa", "1", "--kappa2", "1", "--level", "8", "--t-points", "4"]);
    assert_eq!(v["meta"]["command"], "verify-bounds");
    assert_eq!(v["report"]["epsilon"].as_f64().unwrap(), 0.0);
    assert_eq!(v["report"]["max_ratio"].as_f64().unwrap(), 0.0);
}

#[test]
fn default_pair_respects_bound() {
    let v = json(&["verify-bounds", "--level", "9", "--t-points", "5"]);
    let r = &v["report"];
    assert!(r["max_ratio"].as_f64().unwrap() <= 1.0 + r["tol_disc"].as_f64().unwrap());
    assert_eq!(r["points"].as_array().unwrap().len(), 5 * 6 * 2);
}

#[test]
fn moment_scan_reports_target_slope() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let v = json(&[
        "moment-scan", "--n", "4", "--j-list", "1,8,64", "--samples", "200", "--raw",
        raw.to_str().unwrap(),
    ]);
    let r = &v["report"];
    let zeta = r["zeta"].as_f64().unwrap();
    assert!((r["target_slope"].as_f64().unwrap() + zeta / 2.0).abs() < 1e-12);
    assert_eq!(r["j_list"].as_array().unwrap().len(), 3);
    let text = std::fs::read_to_string(&raw).unwrap();
    assert!(text.contains("sample,j,abs_fprime"));
    assert_eq!(data_rows(&text).len(), 200 * 3);
}

#[test]
fn too_few_samples_rejected() {
    let o = run(&["moment-scan", "--n", "3", "--samples", "10"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn tail_scan_markov() {
    let v = json(&["tail-scan", "--n", "3", "--samples", "200"]);
    assert_eq!(v["report"]["markov_holds"], true);
}

#[test]
fn zero_dkappa_gives_zero_distance() {
    let v = json(&["continuity-scan", "--dkappa", "0", "--level", "12", "--t-points", "8", "--y0", "0.0625"]);
    let pairs = v["report"]["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 1);
    assert_eq!(pairs[0]["distance"].as_f64().unwrap(), 0.0);
}

#[test]
fn whitney_scan_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("boxes.csv");
    let o = run(&[
        "whitney-scan", "--n-min", "1", "--n-max", "3", "--boxes", "4", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("n,j,ell,q,diameter,corner_deriv_modulus"));
    assert!(!data_rows(&csv).is_empty());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert!(summary["report"]["delta_hat"].as_f64().unwrap().is_finite());
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    write(&cfg, "# trace setup\ndriver = constant\nc = 0.5\npoints = 4\n");
    let from_file = stdout(&["--config", cfg.to_str().unwrap(), "trace"]);
    assert!(from_file.contains("# c=0.5"));
    let flag_wins = stdout(&["--config", cfg.to_str().unwrap(), "trace", "--c", "2"]);
    assert!(flag_wins.contains("# c=2"));
    let x: f64 = data_rows(&flag_wins)[4][1].parse().unwrap();
    assert!((x - 2.0).abs() < 1e-9);

    write(&cfg, "driver = zero\ncolour = blue\n");
    let o = run(&["--config", cfg.to_str().unwrap(), "trace"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["continuity-scan", "--level", "12", "--t-points", "8", "--y0", "0.0625"];
    let one = stdout(&[&["--threads", "1"][..], &args].concat());
    let three = stdout(&[&["--threads", "3"][..], &args].concat());
    assert_eq!(one, three);
}
