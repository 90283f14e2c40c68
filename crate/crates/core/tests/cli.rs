use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cregen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cregen")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn params_mbr_zero() {
    let out = cregen(&["params", "--n", "12", "--k", "6", "--L", "3", "--epsilon", "0", "--mode", "mbr"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!((v["alpha"].as_i64(), v["gamma"].as_i64(), v["M"].as_i64()), (Some(3), Some(3), Some(11)));
    assert_eq!(v["theta"], 18);
}

#[test]
fn params_msr_large_epsilon() {
    let out = cregen(&["params", "--n", "6", "--k", "2", "--L", "3", "--epsilon", "1/4", "--mode", "msr"]);
    let v = json(&out);
    assert_eq!((v["alpha"].as_i64(), v["gamma"].as_i64(), v["M"].as_i64()), (Some(4), Some(8), Some(8)));
    assert!(v["theta"].is_null());
}

#[test]
fn params_regime_gap_exits_2() {
    let out = cregen(&["params", "--n", "6", "--k", "2", "--L", "3", "--epsilon", "1/5", "--mode", "msr"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1/4"));
}

#[test]
fn params_rejects_decimal_epsilon() {
    let out = cregen(&["params", "--n", "6", "--k", "2", "--L", "3", "--epsilon", "0.25", "--mode", "msr"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn capacity_at_mbr_point() {
    let out = cregen(&["capacity", "--n", "12", "--k", "6", "--L", "3", "--alpha", "3", "--beta-i", "1", "--beta-c", "0"]);
    assert_eq!(json(&out)["capacity"], 11);
}

fn build_mbr0(dir: &TempDir) -> (std::path::PathBuf, Vec<u8>) {
    let source = dir.path().join("src.bin");
    let bytes = b"clustered!!".to_vec();
    fs::write(&source, &bytes).unwrap();
    let placement = dir.path().join("placement.json");
    let out = cregen(&[
        "build", "--code", "mbr0", "--n", "12", "--k", "6", "--L", "3", "--source", p(&source), "--out", p(&placement),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (placement, bytes)
}

#[test]
fn build_reconstruct_round_trip() {
    let dir = TempDir::new().unwrap();
    let (placement, bytes) = build_mbr0(&dir);
    let recovered = dir.path().join("out.bin");
    let out = cregen(&[
        "reconstruct", "--placement", p(&placement), "--nodes", "1,1 1,2 1,3 1,4 2,1 2,2", "--out", p(&recovered),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(&recovered).unwrap(), bytes);
}

#[test]
fn repair_lists_providers() {
    let dir = TempDir::new().unwrap();
    let (placement, _) = build_mbr0(&dir);
    let (transcript, node) = (dir.path().join("t.json"), dir.path().join("n.json"));
    let out = cregen(&[
        "repair", "--placement", p(&placement), "--node", "2,3", "--transcript-out", p(&transcript), "--node-out", p(&node),
    ]);
    assert!(out.status.success());
    let t: Value = serde_json::from_str(&fs::read_to_string(&transcript).unwrap()).unwrap();
    let providers: Vec<(u64, u64, u64)> = t["contributions"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| {
            let (l, j) = (c["helper"]["l"].as_u64().unwrap(), c["helper"]["j"].as_u64().unwrap());
            c["symbols"].as_array().unwrap().iter().map(move |s| (l, j, s["idx"].as_u64().unwrap()))
        })
        .collect();
    assert_eq!(providers, vec![(2, 1, 8), (2, 2, 10), (2, 4, 12)]);
    assert_eq!(t["gamma"], 3);
    let n: Value = serde_json::from_str(&fs::read_to_string(&node).unwrap()).unwrap();
    let held: Vec<u64> = n["symbols"].as_array().unwrap().iter().map(|s| s["idx"].as_u64().unwrap()).collect();
    assert_eq!(held, vec![8, 10, 12]);
}

#[test]
fn reconstruct_with_too_few_nodes_exits_2() {
    let dir = TempDir::new().unwrap();
    let (placement, _) = build_mbr0(&dir);
    let out = cregen(&["reconstruct", "--placement", p(&placement), "--nodes", "1,1 1,2 1,3 1,4 2,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_placement_exits_3() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "mbr0", "params": {}}"#).unwrap();
    let out = cregen(&["reconstruct", "--placement", p(&bad), "--nodes", "1,1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = cregen(&["repair", "--placement", p(&dir.path().join("missing.json")), "--node", "1,1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn build_length_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let source = dir.path().join("src.bin");
    fs::write(&source, b"twelve bytes").unwrap();
    let out = cregen(&[
        "build", "--code", "mbr0", "--n", "12", "--k", "6", "--L", "3", "--source", p(&source), "--out",
        p(&dir.path().join("p.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn build_from_config_with_generator_dump() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"n": 6, "k": 3, "L": 2, "code": "mbr", "chi": "3"}"#).unwrap();
    let source = dir.path().join("src.bin");
    fs::write(&source, [7u8; 36]).unwrap();
    let (placement, generator) = (dir.path().join("p.json"), dir.path().join("g.csv"));
    let out = cregen(&[
        "build", "--config", p(&config), "--source", p(&source), "--out", p(&placement), "--dump-generator",
        p(&generator),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&generator).unwrap();
    assert_eq!(csv.lines().count(), 18);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 27);
    let v: Value = serde_json::from_str(&fs::read_to_string(&placement).unwrap()).unwrap();
    assert_eq!(v["params"]["stripes"], 2);
}

#[test]
fn verify_config_passes_and_wrong_m_fails() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.json");
    fs::write(
        &good,
        r#"[{"n": 12, "k": 6, "L": 3, "code": "mbr0", "file_size": 11, "seed": 3},
            {"n": 6, "k": 2, "L": 3, "code": "msr-stacked", "file_size": 8}]"#,
    )
    .unwrap();
    let out = cregen(&["verify", "--config", p(&good)]);
    assert!(out.status.success());
    assert_eq!(json(&out).as_array().unwrap().len(), 2);

    let wrong = dir.path().join("wrong.json");
    fs::write(&wrong, r#"{"n": 12, "k": 6, "L": 3, "code": "mbr0", "file_size": 12}"#).unwrap();
    let out = cregen(&["verify", "--config", p(&wrong)]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let failed: Vec<&Value> = report["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["counterexample"]["constructed"], 11);
}

#[test]
fn verify_config_rejects_bad_regime() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"n": 6, "k": 3, "L": 3, "code": "msr-stacked"}"#).unwrap();
    assert_eq!(cregen(&["verify", "--config", p(&config)]).status.code(), Some(2));
}

#[test]
fn verify_sweep_passes() {
    let out = cregen(&["verify", "--sweep", "--n-max", "24"]);
    assert!(out.status.success());
    assert!(json(&out)["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn sweep_csv() {
    let out = cregen(&["sweep", "--n-max", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,k,L,check,pass"));
    assert!(lines.all(|l| l.ends_with(",true")));
}
