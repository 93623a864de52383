use std::process::{Command, Output};

use serde_json::Value;

fn qrspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrspace"))
        .args(args)
        .env_remove("QRSPACE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn factor_text() {
    let o = qrspace(&["factor", "360"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "360 = 2^3*3^2*5");
}

#[test]
fn bad_moduli_are_usage_errors() {
    let o = qrspace(&["factor", "4^2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4 is not prime"));
    let o = qrspace(&["squares", "--modulus", "3*5*3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("prime 3 appears more than once"));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(qrspace(&["factor", "--bogus", "6"]).status.code(), Some(2));
    assert_eq!(qrspace(&[]).status.code(), Some(2));
}

#[test]
fn wall_violation_names_the_wall() {
    let o = qrspace(&["correlate", "--modulus", "30", "-r", "3", "--box=0.5:1.5,-2:-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(i, k) = (1, 2)"), "{}", stderr(&o));
}

#[test]
fn correlate_json_envelope() {
    let o = qrspace(&["--format", "json", "correlate", "--modulus", "30", "--box", "0.5:1.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["command", "modulus", "params", "result"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["command"], "correlate");
    let r = &v["result"];
    assert_eq!(r["s"], "5/2");
    assert_eq!(r["volume"], "1/1");
    assert_eq!(r["R"], 0.5);
    assert_eq!(r["num_h"], 2);
    assert_eq!(r["r"], 2);
}

#[test]
fn correlate_methods_agree() {
    let o = qrspace(&["correlate", "--modulus", "2310", "-r", "3", "--box", "0.5:1.5,0.5:1.5", "--method", "both"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn spacings_csv_header() {
    let o = qrspace(&["--format", "csv", "spacings", "--modulus", "105"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("bin_lo,bin_hi,count,density"));
    assert!(lines.count() > 0);
}

#[test]
fn per_h_csv_rows() {
    // N(2,30) = 2*1*1, N(3,30) = 2*2*1 from the local counts at 2, 3, 5
    let o = qrspace(&["--format", "csv", "correlate", "--modulus", "30", "--box", "0.5:1.5", "--per-h"]);
    assert_eq!(stdout(&o), "h1,n\n2,2\n3,4\n");
}

#[test]
fn cap_exceeded_exit_code() {
    let o = qrspace(&["--max-residues", "10", "squares", "--modulus", "1000", "--list"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn delta_and_lambda() {
    let o = qrspace(&["delta", "--prime", "5", "-r", "3", "--h", "1,-1"]);
    assert!(stdout(&o).contains("Delta = 2"));
    let o = qrspace(&["--format", "json", "lambda", "-r", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lambdas: Vec<i64> = v["result"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["lambda"].as_i64().unwrap())
        .collect();
    assert_eq!(lambdas, [1, 1, 1, 1, 0]);
}

#[test]
fn threads_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_qrspace"))
        .args(["davenport", "--prime", "101"])
        .env("QRSPACE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = qrspace(&["--threads", "0", "davenport", "--prime", "101"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identities_suite_passes() {
    let o = qrspace(&["verify", "--suite", "identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn injected_fault_is_caught() {
    let o = qrspace(&["verify", "--suite", "identities", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mobius inversion identity"));
    assert!(stdout(&o).contains("[FAIL] mobius inversion identity"));
}
