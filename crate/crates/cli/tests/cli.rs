use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_febarrier"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["schema"], "febarrier/1");
    v
}

fn json_err(out: &Output, code: i32) -> Value {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(v["schema"], "febarrier/1");
    assert_eq!(v["error"]["exit_code"], code);
    v
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn layer_bound_key_value_and_flags_agree() {
    let v = json_out(&run(&["layer-bound", "a=2", "m=8", "l=10", "beta=1"]));
    assert!((v["F"].as_f64().unwrap() - (2.0 - 8f64.ln())).abs() < 1e-12);
    assert_eq!(v["argmax"], 1);
    let w = json_out(&run(&[
        "layer-bound",
        "--a",
        "2",
        "--m",
        "8",
        "--l",
        "10",
        "--beta",
        "1",
    ]));
    assert_eq!(v["F"], w["F"]);
    let sweep = json_out(&run(&["layer-bound", "a=1", "m=2,3", "l=4", "beta=0.5,1"]));
    assert_eq!(sweep["results"].as_array().unwrap().len(), 4);
    json_err(&run(&["layer-bound", "a=1", "m=0", "l=4"]), 1);
    json_err(&run(&["layer-bound", "a=1", "q=2"]), 1);
}

#[test]
fn malformed_pauli_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("bad.json");
    std::fs::write(
        &code,
        r#"{"n": 2, "terms": [{"pauli": "ZZ", "J": 1}, {"pauli": "XQ", "J": 1}]}"#,
    )
    .unwrap();
    let e = json_err(&run(&["spectrum", "--code", path_str(&code)]), 1);
    assert_eq!(e["error"]["kind"], "validation");
    let msg = e["error"]["message"].as_str().unwrap();
    assert!(msg.contains("term 1") && msg.contains("position 2"), "{msg}");
}

#[test]
fn caps_exit_with_two() {
    let e = json_err(&run(&["spectrum", "--code", "rep6", "--cap-n", "5"]), 2);
    assert_eq!(e["error"]["kind"], "cap_exceeded");
    json_err(&run(&["davies", "verify-factorization", "--code", "four"]), 2);
    json_err(&run(&["davies", "gap", "--code", "rep6"]), 2);
}

#[test]
fn certificate_round_trip_and_tamper_detection() {
    let dir = tempfile::tempdir().unwrap();
    let flows = dir.path().join("flows.json");
    let cert = dir.path().join("cert.json");
    let search = run(&[
        "flow-search",
        "--code",
        "rep3",
        "--mode",
        "ensemble",
        "--output",
        path_str(&flows),
    ]);
    assert!(search.status.success());
    let made = run(&[
        "flow-energy",
        "--code",
        "rep3",
        "--flows",
        path_str(&flows),
        "--beta",
        "0.7",
        "--output",
        path_str(&cert),
    ]);
    assert!(made.status.success(), "{}", String::from_utf8_lossy(&made.stderr));
    let v = json_out(&run(&["flow-energy", "--verify", path_str(&cert)]));
    assert_eq!(v["verified"], true);
    assert_eq!(v["f_bar"], v["recomputed_f_bar"]);

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let f = doc["certificate"]["f_bar"].as_f64().unwrap();
    doc["certificate"]["f_bar"] = Value::from(f + 1e-6);
    std::fs::write(&cert, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["flow-energy", "--verify", path_str(&cert)]);
    json_err(&out, 3);
}

#[test]
fn bound_matches_dense_mixing_time() {
    let v = json_out(&run(&["bound", "--code", "rep2", "--beta", "1"]));
    let c = v["flow_bound"]["c_lower"].as_f64().unwrap();
    let tau = v["flow_bound"]["tau_bound"].as_f64().unwrap();
    assert!((tau - 8.0 / c * 4f64.exp()).abs() < 1e-9 * tau);
    assert_eq!(v["exact"]["within_bound"], true);
    let evolve = json_out(&run(&[
        "davies",
        "evolve",
        "--code",
        "rep2",
        "--beta",
        "1",
        "--initial",
        "01",
    ]));
    let t_mix = evolve["mixing"]["t_mix"].as_f64().unwrap();
    assert!((t_mix - v["exact"]["mixing"]["t_mix"].as_f64().unwrap()).abs() < 1e-12);
    assert!(evolve["crossing_quarter"].as_f64().unwrap() <= t_mix);
    assert_eq!(evolve["under_envelope"], true);
}

#[test]
fn config_file_overrides_flags_and_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "spectrum", "code": "rep2", "beta": 2.0}"#).unwrap();
    let v = json_out(&run(&["spectrum", "--beta", "1", "--config", path_str(&cfg)]));
    assert_eq!(v["beta"], 2.0);
    std::fs::write(&cfg, r#"{"beta": 2.0, "temperature": 1}"#).unwrap();
    json_err(&run(&["spectrum", "--code", "rep2", "--config", path_str(&cfg)]), 1);
    std::fs::write(&cfg, r#"{"command": "bound"}"#).unwrap();
    json_err(&run(&["spectrum", "--code", "rep2", "--config", path_str(&cfg)]), 1);
}

#[test]
fn kmc_is_reproducible_from_seed() {
    let args = ["kmc", "--code", "rep2", "--trajectories", "500", "--seed", "17"];
    let a = json_out(&run(&args));
    let b = json_out(&run(&args));
    assert_eq!(a, b);
    assert_eq!(a["stationary_chi_square"]["passed"], true);
    let csv = run(&[
        "kmc",
        "--code",
        "rep2",
        "--format",
        "csv",
        "--initial",
        "XI",
        "--seed",
        "4",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("t,syndrome,energy,class\n"));
}

#[test]
fn output_file_and_csv_rules() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let r = run(&[
        "davies",
        "evolve",
        "--code",
        "rep1",
        "--format",
        "csv",
        "--points",
        "5",
        "--output",
        path_str(&out),
    ]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 6);
    json_err(&run(&["spectrum", "--code", "rep2", "--format", "csv"]), 1);
}

#[test]
fn barrier_forms() {
    let v = json_out(&run(&["barrier", "--code", "rep3", "--target", "XXX", "--step", "XII"]));
    assert_eq!(v["barrier"], 4.0);
    let v = json_out(&run(&["barrier", "--code", "rep3", "--target", "XXX"]));
    assert_eq!(v["barrier"], 4.0);
    assert_eq!(v["optimal"], true);
    let v = json_out(&run(&["barrier", "--code", "bell"]));
    assert_eq!(v["targets"].as_array().unwrap().len(), 16);
    json_err(&run(&["barrier", "--code", "rep3", "--target", "XX"]), 1);
}
