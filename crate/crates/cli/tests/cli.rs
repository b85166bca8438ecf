use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn sbc_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbc-lab")).args(args).env_remove("SBC_LAB_THREADS").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = sbc_lab(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn strs(v: &Value) -> Vec<&str> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect()
}

fn write_census(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("census.json");
    let out = sbc_lab(&[
        "census",
        "--n",
        "3",
        "--s",
        "1.5",
        "--restarts",
        "300",
        "--seed",
        "7",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    path
}

#[test]
fn coeffs_four() {
    let v = json(&["coeffs", "4"]);
    assert_eq!(v["n"], 4);
    assert_eq!(strs(&v["c"]), ["1", "6", "11", "6"]);
    assert_eq!(v["sum"], "24");
}

#[test]
fn coeffs_with_identities_and_integral() {
    let v = json(&["coeffs", "10", "--identities", "12", "--integral", "3"]);
    assert_eq!(v["identities"]["rows"].as_array().unwrap().len(), 12);
    assert_eq!(v["log_integral"]["a_j"], "1/6");
    assert!(v["log_integral"]["relative_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn coefficients_stay_exact_beyond_double_precision() {
    let v = json(&["coeffs", "25"]);
    assert_eq!(v["sum"], "15511210043330985984000000");
}

#[test]
fn betti_four() {
    let v = json(&["betti", "4"]);
    assert_eq!(strs(&v["betti"]), ["1", "0", "7", "0", "18", "6"]);
    assert_eq!(v["sum"], "32");
    assert_eq!(v["mccord"], "19");
}

#[test]
fn bounds_regime_and_csv() {
    let v = json(&["bounds", "3", "--regime", "above_etak"]);
    assert_eq!(v["entries"][0]["total"], "24");
    let out = sbc_lab(&["bounds", "4", "4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("label,total,non_collinear,hypothetical"));
    assert!(text.contains("quotient_betti_sum,32,,false"));
}

#[test]
fn census_example() {
    let v = json(&["census", "--n", "3", "--d", "2", "--s", "1.5", "--restarts", "2000", "--seed", "7"]);
    assert!(v["summary"]["distinct"].as_u64().unwrap() >= 14);
    assert_eq!(v["summary"]["collinear"], 12);
    assert!(v.get("wall_clock_seconds").is_none());
}

#[test]
fn census_output_is_reproducible() {
    let args = ["census", "--n", "3", "--s", "1.5", "--restarts", "400", "--seed", "11"];
    let a = sbc_lab(&args).stdout;
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2"]);
    let b = sbc_lab(&threaded).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn timing_is_opt_in() {
    let v = json(&["census", "--n", "3", "--s", "1.5", "--restarts", "50", "--timing"]);
    assert!(v["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"n": 4, "s_values": [2.0], "seed": 3, "restarts": 10}"#).unwrap();
    let v = json(&["collinear", "--config", cfg.to_str().unwrap()]);
    assert_eq!(v["count"], 48);
    let v = json(&["collinear", "--config", cfg.to_str().unwrap(), "--n", "3"]);
    assert_eq!(v["count"], 12);
}

#[test]
fn config_output_section_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let target = dir.path().join("table.csv");
    let body = serde_json::json!({"output": {"path": target, "format": "csv"}});
    std::fs::write(&cfg, body.to_string()).unwrap();
    let out = sbc_lab(&["betti", "5", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert_eq!(text.lines().next(), Some("degree,betti"));
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn validation_errors_exit_one() {
    assert_eq!(sbc_lab(&["betti", "3"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["bounds", "2"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["census", "--n", "3"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["census", "--n", "4", "--masses", "1,2,3", "--s", "2"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["bounds", "3", "--regime", "sideways"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["morse-check", "/nonexistent/census.json"]).status.code(), Some(1));
    assert_eq!(sbc_lab(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"tolerances": {"res": -1.0}}"#).unwrap();
    let out = sbc_lab(&["betti", "4", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s_values"));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_census(dir.path());
    let mut report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    report["solutions"][0]["q"][0][0] = Value::from(0.123);
    std::fs::write(&path, report.to_string()).unwrap();
    assert_eq!(sbc_lab(&["morse-check", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn morse_check_of_saved_census() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_census(dir.path());
    let v = json(&["morse-check", path.to_str().unwrap()]);
    assert_eq!(v["consistent"], true);
    assert_eq!(v["division_remainder"], "0");
}

#[test]
fn continuation_finds_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_census(dir.path());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // A second-axis collinear solution with index 1 at s = 1.5.
    let id = report["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| {
            s["classification"]["kind"] == "collinear"
                && s["classification"]["axes"][0] == 2
                && s["triple"]["index"] == 1
        })
        .map(|s| s["id"].as_u64().unwrap().to_string())
        .unwrap();
    let v = json(&["continue", "--census", path.to_str().unwrap(), "--id", &id, "--to", "3", "--steps", "10"]);
    let s = v["degeneracy"]["S"][0].as_f64().unwrap();
    assert!((s - 2.4).abs() < 1e-4, "{s}");
    assert_eq!(v["degeneracy"]["at"]["nullity"], 1);
}

#[test]
fn flow_and_check45() {
    let v = json(&["flow", "--seed", "3", "--T", "2"]);
    assert_eq!(v["S"], serde_json::json!([2.0, 1.0, 1.0]));
    assert!(v["potential"][1].as_f64() >= v["potential"][0].as_f64());
    let out = sbc_lab(&["flow", "--seed", "3", "--T", "0.5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,q1_1,"));
    let v = json(&["check45", "--seeds", "5", "--seed", "1"]);
    assert_eq!(v["seeds"], 5);
    assert_eq!(v["outcomes"].as_array().unwrap().len(), 5);
}

#[test]
fn orbit_lift() {
    let v = json(&["orbit", "--n", "3", "--s", "4", "--restarts", "300", "--census-id", "0"]);
    assert_eq!(v["periodicity"]["kind"], "periodic");
    assert!(v["newton_residual"].as_f64().unwrap() < 1e-8);
    let v = json(&["orbit", "--n", "3", "--s", "2", "--restarts", "300"]);
    assert_eq!(v["periodicity"]["kind"], "quasi_periodic");
    let out = sbc_lab(&["orbit", "--n", "3", "--s", "4", "--restarts", "300", "--samples", "11", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 12);
}
