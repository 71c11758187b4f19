use std::process::{Command, Output};

use serde_json::Value;

fn crwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crwave")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

const Q2: &str = r#"{"p":2,"f":1,"e":1}"#;

#[test]
fn basis_norms_within_bounds() {
    let out = crwave(&["--field", Q2, "--r", "1", "basis", "--h-max", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    let elements = rep["results"]["elements"].as_array().unwrap();
    // four cosets, two indices each
    assert_eq!(elements.len(), 8);
    assert!(elements.iter().all(|e| e["within_bound"] == true));
    assert_eq!(rep["wall_time"], Value::Null);
}

#[test]
fn level_zero_basis_has_unit_norms() {
    let out = crwave(&["--field", r#"{"p":3,"f":2,"e":1}"#, "--r", "2", "basis", "--h-max", "0"]);
    assert_eq!(out.status.code(), Some(0));
    for e in report(&out)["results"]["elements"].as_array().unwrap() {
        assert_eq!(e["norm"]["log_q_upper"]["num"], 0);
    }
}

#[test]
fn reports_are_byte_identical() {
    let args = ["--field", r#"{"p":5,"f":1,"e":1}"#, "--r", "1/2", "--seed", "7", "analyze", "--level", "2"];
    assert_eq!(crwave(&args).stdout, crwave(&args).stdout);
}

#[test]
fn analyze_round_trips_and_rejects_high_degree() {
    let out = crwave(&["--field", r#"{"p":3,"f":1,"e":2}"#, "--r", "5/3", "analyze"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["verdicts"]["round_trip"], true);

    let path = std::env::temp_dir().join(format!("crwave-cubic-{}.json", std::process::id()));
    let f = r#"{"field":{"p":3,"f":1,"e":1},"level":0,"cosets":[{"rep":{"digits":[],"level":0},"coeffs":[{"idx":[3],"val":"p^(0) * [1]"}]}]}"#;
    std::fs::write(&path, f).unwrap();
    let path = path.to_str().unwrap();
    assert_eq!(crwave(&["--r", "2", "analyze", "--input", path]).status.code(), Some(3));
    let out = crwave(&["--r", "3", "analyze", "--input", path]);
    let entries = report(&out)["results"]["coefficients"]["entries"].as_array().unwrap().clone();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["b"], "p^(0) * [1]");
}

#[test]
fn avv_on_builtins() {
    let q3 = r#"{"p":3,"f":1,"e":1}"#;
    let out = crwave(&["--field", q3, "--r", "1", "--depth", "6", "avv", "--moments", "haar"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["verdicts"]["order_r"], true);
    assert_eq!(rep["results"]["avv"]["log_q_c_estimate"]["num"], 0);

    let rep = report(&crwave(&["--field", q3, "--r", "1/2", "--depth", "6", "avv", "--moments", "haar"]));
    assert_eq!(rep["verdicts"]["order_r"], false);
    assert!(!rep["results"]["avv"]["growth_witness"].is_null());

    let rep = report(&crwave(&["--field", q3, "--r", "2", "avv", "--moments", "dirac", "--point", "4"]));
    assert_eq!(rep["verdicts"]["order_r"], true);
}

#[test]
fn avv_rejects_a_broken_table() {
    let path = std::env::temp_dir().join(format!("crwave-moments-{}.json", std::process::id()));
    // total mass 1 but nothing on the children
    std::fs::write(&path, r#"[{"a":{"digits":[],"level":0},"n":0,"i":[0],"val":"p^(0) * [1]"}]"#).unwrap();
    let out = crwave(&[
        "--field",
        r#"{"p":3,"f":1,"e":1}"#,
        "--r",
        "0",
        "--depth",
        "2",
        "avv",
        "--moments",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["verdicts"]["additive"], false);
}

#[test]
fn counterexample_exit_codes() {
    let out = crwave(&["--depth", "3", "counterexample", "--p", "3", "--r-vec", "3/2,1/2", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["verdicts"]["separated"], true);
    assert_eq!(rep["verdicts"]["tensor_bound"], false);
    assert_eq!(
        crwave(&["--depth", "0", "counterexample", "--p", "3", "--r-vec", "1,0", "--k", "2"]).status.code(),
        Some(4)
    );
    assert_eq!(crwave(&["counterexample", "--p", "3", "--r-vec", "1,0", "--k", "1"]).status.code(), Some(3));
}

#[test]
fn input_errors() {
    assert_eq!(crwave(&["basis"]).status.code(), Some(3));
    assert_eq!(crwave(&["--field", "{\"p\":4,\"f\":1,\"e\":1}", "basis"]).status.code(), Some(3));
    assert_eq!(crwave(&["selftest", "--scope", "bogus"]).status.code(), Some(3));
}

#[test]
fn json_out_and_timing() {
    let path = std::env::temp_dir().join(format!("crwave-report-{}.json", std::process::id()));
    let out =
        crwave(&["--field", Q2, "--r", "0", "--timing", "--json", path.to_str().unwrap(), "basis", "--h-max", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(written["wall_time"].is_number());
    assert_eq!(written["command"], "basis");
}

#[test]
fn fast_selftest_passes() {
    let out = crwave(&["selftest", "--scope", "fast"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["results"]["failing"].as_array().unwrap().len(), 0);
}
