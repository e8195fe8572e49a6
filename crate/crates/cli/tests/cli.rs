use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn divgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divgen")).args(args).env_remove("DIVGEN_THREADS").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = divgen(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn malpha_mean_is_incomplete_with_the_canonical_witness() {
    let v = json(&["complete", "--family", "bernoulli-malpha", "--n", "3", "--statistic", "mean"]);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "complete");
    assert_eq!(v["verdict"], "INCOMPLETE");
    assert_eq!(v["witness"], serde_json::json!(["0", "1", "-2", "3"]));
    assert_eq!(v["values"], serde_json::json!(["0", "1/3", "2/3", "1"]));
    assert_eq!(v["setting"]["glf"], "ldpd");
}

#[test]
fn classical_bernoulli_sum_is_complete() {
    let v = json(&["complete", "--family", "bernoulli", "--n", "3", "--statistic", "sum"]);
    assert_eq!(v["verdict"], "COMPLETE");
    assert!(v["witness"].is_null());
}

#[test]
fn emit_matrix_writes_power_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    json(&["complete", "--family", "bernoulli-malpha", "--n", "3", "--emit-matrix", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("power,0,1/3,2/3,1"));
    assert!(lines.next().unwrap().starts_with("0,"));
}

#[test]
fn stress_at_zero_prefers_mdpde() {
    let v = json(&["stress", "--nu", "3", "--mu", "0"]);
    let d = &v["decision"];
    assert_eq!(d["preferred"], "MDPDE");
    assert!((d["reliability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(d["in_reliability_band"].as_bool().unwrap());
    assert_eq!(v["cross_check"]["same_sign"], true);
}

#[test]
fn stress_far_from_zero_prefers_umvue() {
    let v = json(&["stress", "--nu", "10", "--mu", "-3", "--n", "25"]);
    assert_eq!(v["decision"]["preferred"], "UMVUE");
}

#[test]
fn stress_curve_csv() {
    let out = divgen(&["stress-curve", "--nu", "3", "--mu-range", "-1:1:0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "mu,reliability,aed_closed,aed_generic,preferred");
    assert_eq!(lines.len(), 6);
    assert!(lines[3].starts_with("0,0.5,"));
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",MDPDE")));
}

#[test]
fn stress_curve_to_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let to_file = divgen(&["stress-curve", "--nu", "5", "--mu-range", "0:3:0.25", "--out", path.to_str().unwrap()]);
    assert!(to_file.status.success());
    let stdout = divgen(&["stress-curve", "--nu", "5", "--mu-range", "0:3:0.25"]);
    assert_eq!(std::fs::read_to_string(path).unwrap().trim_end(), String::from_utf8(stdout.stdout).unwrap().trim_end());
}

#[test]
fn thread_count_does_not_change_output() {
    let one = divgen(&["--threads", "1", "stress-curve", "--nu", "4", "--mu-range", "-2:2:0.1"]);
    let four = divgen(&["--threads", "4", "stress-curve", "--nu", "4", "--mu-range", "-2:2:0.1"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn monte_carlo_risk_is_reproducible() {
    let args = [
        "risk",
        "--estimator",
        "umvue",
        "--mu",
        "1",
        "--nu",
        "3",
        "--n",
        "10",
        "--method",
        "mc",
        "--reps",
        "5000",
        "--seed",
        "9",
    ];
    let a = divgen(&args);
    let b = divgen(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["risk"]["seed"], 9);
    assert_eq!(v["risk"]["method"], "MONTE_CARLO");
}

#[test]
fn quadrature_and_monte_carlo_risk_agree() {
    let quad = json(&["risk", "--estimator", "mdpde", "--mu", "0.5", "--nu", "5", "--n", "15"]);
    let mc = json(&[
        "risk",
        "--estimator",
        "mdpde",
        "--mu",
        "0.5",
        "--nu",
        "5",
        "--n",
        "15",
        "--method",
        "mc",
        "--reps",
        "40000",
        "--seed",
        "1",
    ]);
    let q = quad["risk"]["risk"].as_f64().unwrap();
    let m = mc["risk"]["risk"].as_f64().unwrap();
    let se = mc["risk"]["standard_error"].as_f64().unwrap();
    assert!((q - m).abs() < 5.0 * se, "{q} vs {m} ± {se}");
}

#[test]
fn mdpde_from_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.txt", "2\n3\n\n7\n");
    let v = json(&["mdpde", "--family", "student:nu=3", "--data", &data]);
    let est = v["report"]["estimate"][0].as_f64().unwrap();
    assert!((est - 4.0).abs() < 1e-9);
    assert_eq!(v["n"], 3);
}

#[test]
fn malformed_data_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.txt", "1\nabc\n");
    let out = divgen(&["mdpde", "--family", "student:nu=3", "--data", &data]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("abc"));
}

#[test]
fn risk_fit_recovers_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("n,risk\n");
    for n in [20.0f64, 40.0, 80.0, 160.0, 320.0] {
        csv.push_str(&format!("{n},{}\n", 0.3 / n + 1.5 / (n * n)));
    }
    let data = write(dir.path(), "r.csv", &csv);
    let v = json(&["risk-fit", "--data", &data]);
    assert!((v["fit"]["a"].as_f64().unwrap() - 0.3).abs() < 1e-9);
    assert!((v["fit"]["b"].as_f64().unwrap() - 1.5).abs() < 1e-6);
    assert!(v["fit"]["warning"].is_null());
}

#[test]
fn divergence_values() {
    let v = json(&["divergence", "--kind", "dpd", "--g", "bernoulli@0.3", "--f", "bernoulli@0.6"]);
    assert!((v["value"].as_f64().unwrap() - 0.18).abs() < 1e-12);
    let same = json(&["divergence", "--kind", "kl", "--g", "normal@1", "--f", "normal@1"]);
    assert!(same["value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn sufficiency_of_the_mean() {
    let v = json(&["sufficiency", "--family", "bernoulli", "--n", "3"]);
    assert_eq!(v["sufficiency"]["passed"], true);
    assert_eq!(v["minimality"]["minimal"], true);
    let c = json(&["sufficiency", "--family", "bernoulli", "--n", "3", "--statistic", "coordinate:1"]);
    assert_eq!(c["sufficiency"]["passed"], false);
}

#[test]
fn deform_exact_weights() {
    let v = json(&["deform", "--family", "bernoulli-malpha", "--n", "2", "--exact"]);
    assert_eq!(v["exact"].as_array().unwrap().len(), 4);
    for row in v["pmf"].as_array().unwrap() {
        let total: f64 = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn toml_family_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "parity.toml",
        r#"
glf = "log"

[family]
kind = "table"
name = "parity"

[[family.table]]
value = 0
weight = "(1-lambda)/2"
[[family.table]]
value = 1
weight = "(1-lambda)/2"
[[family.table]]
value = 2
weight = "lambda/2"
[[family.table]]
value = 3
weight = "lambda/2"
"#,
    );
    let v = json(&["deform", "--family", &spec, "--n", "1"]);
    assert_eq!(v["setting"]["family"], "parity");
}

#[test]
fn aed_reports_preference() {
    let v = json(&["aed", "--nu", "3", "--mu", "0"]);
    assert_eq!(v["report"]["preferred"], "MDPDE");
    let m = json(&["aed", "--nu", "3", "--mu", "0", "--estimand", "mean"]);
    assert!(m["report"]["aed"].as_f64().unwrap().is_finite());
}

#[test]
fn schema_version_everywhere() {
    for args in [
        &["stress", "--nu", "3", "--mu", "1"][..],
        &["aed", "--nu", "5", "--mu", "1"][..],
        &["sufficiency", "--family", "bernoulli", "--n", "2"][..],
    ] {
        assert_eq!(json(args)["schema_version"], 1);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(divgen(&[]).status.code(), Some(2));
    assert_eq!(divgen(&["stress", "--nu", "3", "--mu", "0", "--bogus"]).status.code(), Some(2));
    assert_eq!(divgen(&["stress-curve", "--nu", "3", "--mu-range", "1:0:0.1"]).status.code(), Some(2));
    assert_eq!(divgen(&["complete", "--family", "poisson", "--n", "2"]).status.code(), Some(2));
    assert_eq!(divgen(&["--threads", "0", "stress", "--nu", "3", "--mu", "0"]).status.code(), Some(2));
    assert_eq!(divgen(&["stress", "--nu", "2", "--mu", "0"]).status.code(), Some(1));
    assert_eq!(
        divgen(&["divergence", "--kind", "kl", "--g", "bernoulli@1.5", "--f", "bernoulli@0.5"]).status.code(),
        Some(1)
    );
    let out = divgen(&["stress", "--nu", "1", "--mu", "0"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("divgen: "));
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_divgen"))
        .args(["stress", "--nu", "3", "--mu", "0"])
        .env("DIVGEN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
