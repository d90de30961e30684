use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ncbmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncbmo")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name} in {r}"))
}

#[test]
fn euclidean_suite_reports_kq_and_domination() {
    let out = ncbmo(&["verify", "metric-euclidean", "--dim", "1", "--t-grid", "log:1e-3:1e3:60"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], "ncbmo-report/1");
    assert_eq!(r["suite"], "metric-euclidean");
    let kq = check(&r, "k_q")["measured"].as_f64().unwrap();
    let closed = (2.0 * std::f64::consts::E / std::f64::consts::PI.sqrt()
        * (std::f64::consts::E / (std::f64::consts::E - 1.0).powi(2)))
    .sqrt();
    assert!((kq - closed).abs() < 1e-12);
    assert_eq!(check(&r, "kernel_domination")["status"], "pass");
}

#[test]
fn triangular_suite_defect_is_tiny() {
    let out = ncbmo(&["verify", "czo-triangular", "--n", "8", "--samples", "20", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let c = check(&r, "identity_defect");
    assert_eq!(c["status"], "pass");
    assert!(c["measured"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["parameters"]["seed"], 7);
}

#[test]
fn malformed_flag_exits_2_without_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    for args in [
        vec!["verify", "czo-triangular", "--bogus", "--output", p],
        vec!["verify", "czo-triangular", "--n", "eight", "--output", p],
        vec!["verify", "no-such-suite", "--output", p],
        vec!["verify", "metric-euclidean", "--t-grid", "lin:1:2", "--output", p],
        vec!["verify", "czo-triangular", "--tol", "-1", "--output", p],
    ] {
        let out = ncbmo(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(!path.exists(), "{args:?} wrote a report");
    }
}

#[test]
fn failed_check_exits_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = ncbmo(&["verify", "czo-hormander", "--tol", "1e-9", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["status"], "fail");
}

#[test]
fn reports_are_byte_identical_across_runs_and_jobs() {
    let a = ncbmo(&["verify", "lemma11-properties", "--samples", "100", "--jobs", "1"]);
    let b = ncbmo(&["verify", "lemma11-properties", "--samples", "100", "--jobs", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = ncbmo(&["verify", "lemma11-properties", "--samples", "100", "--seed", "11"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn timing_is_opt_in() {
    let plain = report(&ncbmo(&["verify", "czo-hormander"]));
    assert!(plain.get("wall_clock_seconds").is_none());
    let timed = report(&ncbmo(&["verify", "czo-hormander", "--timing"]));
    assert!(timed["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn floats_use_seventeen_significant_digits() {
    let out = ncbmo(&["verify", "czo-hormander"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"measured\"")).unwrap();
    let num = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = num.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{num}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_path = dir.path().join("from-config.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"output": {:?}, "params": {{"n": 6, "samples": 5, "seed": 1}}}}"#, out_path.to_str().unwrap()),
    )
    .unwrap();
    let out = ncbmo(&["verify", "czo-triangular", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["parameters"]["n"], 6);
    assert_eq!(r["parameters"]["samples"], 5);
    assert_eq!(r["parameters"]["seed"], 3);
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bmo_of_a_diagonal_matrix_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"n": 3, "re": [[1,0,0],[0,2,0],[0,0,3]], "im": [[0,0,0],[0,0,0],[0,0,0]]}"#);
    let out = ncbmo(&["bmo", "--input", &m, "--semigroup", "poisson", "--terse"]);
    let r = report(&out);
    assert!(check(&r, "bmo_norm")["measured"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["result"]["samples"].as_array().unwrap().len(), 0);

    let inline = r#"{"kind":"schur_length","n":3,"psi":{"form":"power","exponent":1}}"#;
    let out = ncbmo(&["bmo", "--input", &m, "--semigroup", inline]);
    assert_eq!(out.status.code(), Some(0));

    let out = ncbmo(&["bmo", "--input", &m, "--semigroup", "sinc-heat", "--side", "diagonal"]);
    assert_eq!(out.status.code(), Some(2));
    let wrong = r#"{"kind":"schur_length","n":4,"psi":{"form":"power","exponent":1}}"#;
    assert_eq!(ncbmo(&["bmo", "--input", &m, "--semigroup", wrong]).status.code(), Some(2));
}

#[test]
fn qtorus_operations() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"n": 2, "theta_upper": [0.5], "coeffs": [{"xi": [0,0], "re": 2, "im": 0}, {"xi": [1,0], "re": 1, "im": 0}, {"xi": [0,1], "re": 0, "im": 1}]}"#,
    );
    let r = report(&ncbmo(&["qtorus", "trace", "--input", &s]));
    assert_eq!(r["result"]["re"].as_f64().unwrap(), 2.0);

    let r = report(&ncbmo(&["qtorus", "heat", "--input", &s, "--t", "0.5"]));
    let coeffs = r["result"]["coeffs"].as_array().unwrap();
    let c10 = coeffs.iter().find(|c| c["xi"] == serde_json::json!([1, 0])).unwrap();
    assert!((c10["re"].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-15);

    let r = report(&ncbmo(&["qtorus", "gns-norm", "--input", &s, "--box", "64"]));
    let v = check(&r, "gns_opnorm")["measured"].as_f64().unwrap();
    assert!(v <= 4.0 + 1e-9 && v > 2.0);

    let out = ncbmo(&["qtorus", "sigma-check", "--input", &s]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(ncbmo(&["qtorus", "heat", "--input", &s]).status.code(), Some(2));
    assert_eq!(ncbmo(&["qtorus", "gns-norm", "--input", &s, "--box", "1"]).status.code(), Some(2));
}

#[test]
fn transfer_on_named_and_tabled_groups() {
    let out = ncbmo(&["transfer", "--group", "S3", "--kernels", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["parameters"]["order"], 6);

    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "z3.json", r#"{"order": 3, "mul": [[0,1,2],[1,2,0],[2,0,1]]}"#);
    let out = ncbmo(&["transfer", "--group", &g, "--kernels", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let bad = write(dir.path(), "bad.json", r#"{"order": 2, "mul": [[0,0],[0,0]]}"#);
    assert_eq!(ncbmo(&["transfer", "--group", &bad]).status.code(), Some(2));
    assert_eq!(ncbmo(&["transfer", "--group", "nonsense"]).status.code(), Some(2));
}
