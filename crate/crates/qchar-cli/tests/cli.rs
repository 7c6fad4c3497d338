use std::process::{Command, Output};

fn qchar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qchar")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qchar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn expand_overpartitions() {
    let o = qchar(&["expand", "eta(2)/eta(1)^2", "--order", "10"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o).trim(),
        "1 + 2*q^1 + 4*q^2 + 8*q^3 + 14*q^4 + 24*q^5 + 40*q^6 + 64*q^7 + 100*q^8 + 154*q^9 + O(q^10)"
    );
}

#[test]
fn expand_zero_is_empty() {
    let o = qchar(&["expand", "0", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["terms"].as_array().unwrap().len(), 0);
    assert_eq!(v["trunc"], "20/1");
}

#[test]
fn expand_ucpf_g3_head() {
    let o = qchar(&["expand", "ucpf(G3)", "--order", "3", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "exponent,coeff,trunc");
    // constant term, then 3q^{1/2} from the three single-particle states
    assert_eq!(rows[1], "0/1,1/1,3/1");
    assert_eq!(rows[2], "1/2,3/1,3/1");
}

#[test]
fn json_series_round_trips() {
    let o = qchar(&["expand", "L(7/10,3/80) * eta(1)^-1", "--order", "6", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let printed = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&printed).unwrap();
    let s = qchar::qseries::QSeries::from_json(&v).unwrap();
    let mut again = serde_json::to_string_pretty(&s.to_json()).unwrap();
    again.push('\n');
    assert_eq!(printed, again);
}

#[test]
fn parse_errors_exit_2() {
    let o = qchar(&["expand", "eta(2) + foo"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("column 10"));
    assert_eq!(code(&qchar(&["expand", "eta(1)", "--order", "0"])), 2);
    assert_eq!(code(&qchar(&["expand", "eta(1)", "--format", "xml"])), 2);
    assert_eq!(code(&qchar(&["frobnicate"])), 2);
}

#[test]
fn verify_builtin_group_passes() {
    let o = qchar(&["verify", "--builtin", "--filter", "dissection", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failed"], 0);
    assert_eq!(v["reports"][0]["checked_to"], "20/1");
}

#[test]
fn verify_negative_controls_fail() {
    let o = qchar(&["verify", "--builtin", "--filter", "neg/dissection", "--format", "csv"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("neg/dissection/phi,false,20/1,10/1,"), "{first}");
}

#[test]
fn verify_missing_file_exits_3() {
    assert_eq!(code(&qchar(&["verify", "/definitely/not/here.json"])), 3);
}

#[test]
fn verify_exported_corpus() {
    let path = tmp("corpus.json");
    let p = path.to_str().unwrap();
    let o = qchar(&["verify", "--builtin", "--filter", "decomp/sl3", "--export", p]);
    assert_eq!(code(&o), 0);
    let o = qchar(&["verify", p, "--order", "8"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("6 passed, 0 failed"));
    std::fs::write(&path, "[{\"id\": 1}]").unwrap();
    assert_eq!(code(&qchar(&["verify", p])), 2);
}

#[test]
fn verify_needs_a_source() {
    assert_eq!(code(&qchar(&["verify"])), 2);
    assert_eq!(code(&qchar(&["verify", "--builtin", "--filter", "no-such-tag"])), 2);
}

#[test]
fn fusion_sl3_solve_contains_reference() {
    let o = qchar(&["fusion", "--builtin", "sl3", "--solve", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["contains_reference"], true);
    assert_eq!(v["count"], 64);
}

#[test]
fn fusion_residuals() {
    let o = qchar(&["fusion", "--builtin", "sl4", "--residual", "reference"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().all(|l| l.contains(" 0 violated")));
    let o = qchar(&["fusion", "--builtin", "sl3", "--residual", "trivial"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn fusion_cap_and_bad_ring() {
    assert_eq!(code(&qchar(&["fusion", "--builtin", "sl4", "--solve", "--cap", "1000"])), 4);
    let path = tmp("bad.ring");
    std::fs::write(&path, "channels: [0] [1]\nnonsense\n").unwrap();
    assert_eq!(code(&qchar(&["fusion", "--ring", path.to_str().unwrap(), "--solve"])), 2);
    assert_eq!(code(&qchar(&["fusion", "--ring", "/no/such.ring", "--solve"])), 3);
}

#[test]
fn fusion_ring_file() {
    let path = tmp("z2.ring");
    std::fs::write(&path, "channels: [0] [1]\ndims: 0 1/2\nrow [1]: [1] [0]\n").unwrap();
    let o = qchar(&["fusion", "--ring", path.to_str().unwrap(), "--solve"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("2 solutions"));
}

#[test]
fn ucpf_subcommand() {
    let o = qchar(&["ucpf", "--matrix", "G4", "--dilog", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["central_charge"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let fam = stdout(&qchar(&["ucpf", "--family", "sl3-twisted", "--order", "4"]));
    let fock = stdout(&qchar(&["ucpf", "--family", "sl3-twisted", "--fock", "--order", "4"]));
    assert_eq!(fam, fock);

    let path = tmp("g.json");
    std::fs::write(&path, r#"{"G": [["2"]], "a": ["0"], "prefactor": "0"}"#).unwrap();
    // Σ q^{N²}/(q)_N, the first Rogers-Ramanujan product
    let o = qchar(&["ucpf", "--config", path.to_str().unwrap(), "--order", "8"]);
    assert_eq!(stdout(&o).trim(), "1 + q^1 + q^2 + q^3 + 2*q^4 + 2*q^5 + 3*q^6 + 3*q^7 + O(q^8)");
    std::fs::write(&path, r#"{"G": [["2", "1"]]}"#).unwrap();
    assert_eq!(code(&qchar(&["ucpf", "--config", path.to_str().unwrap()])), 2);
}

#[test]
fn modular_default_points() {
    let o = qchar(&["modular", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1 + 6);
    assert_eq!(code(&qchar(&["modular", "--tau", "0.5-1i"])), 2);
}

#[test]
fn workers_flag() {
    let o = qchar(&["--workers", "2", "verify", "--builtin", "--filter", "dissection"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&qchar(&["--workers", "0", "expand", "0"])), 2);
}
