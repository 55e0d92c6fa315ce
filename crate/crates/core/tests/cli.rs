use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btree-histories")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("btree-histories-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn insert_worked_permutation() {
    let doc = json(&["insert", "--m", "1", "--perm", "6,1,2,4,7,5,9,8,3"]);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["m"], 1);
    assert_eq!(doc["result"]["history"]["leaf_choices"], serde_json::json!([1, 1, 2, 2, 2, 3, 3, 2]));
    assert_eq!(doc["result"]["tree"]["root"]["keys"], serde_json::json!([6]));
    let single = json(&["insert", "--m", "1", "--perm", "1"]);
    assert_eq!(single["result"]["leaf_sizes"], serde_json::json!([1]));
    let m2 = json(&["insert", "--m", "2", "--perm", "1,2,3,4,5"]);
    assert_eq!(m2["result"]["tree"]["root"]["keys"], serde_json::json!([3]));
    assert_eq!(m2["result"]["leaf_sizes"], serde_json::json!([2, 2]));
}

#[test]
fn insert_formats() {
    let dot = String::from_utf8(run(&["insert", "--m", "1", "--perm", "2,1,3", "--format", "dot"]).stdout).unwrap();
    assert!(dot.starts_with("// btree-histories"));
    assert!(dot.contains("digraph btree"));
    let path = temp_file("keys.txt", "3 1\n2");
    let doc = json(&["insert", "--m", "1", "--perm-file", path.to_str().unwrap()]);
    assert_eq!(doc["result"]["height"], 1);
}

#[test]
fn bijection_both_directions() {
    let doc = json(&["bijection", "--m", "1", "--history", "1,1,2,2,2,3,3,2"]);
    assert_eq!(doc["result"]["round_trip"], true);
    let tree = doc["result"]["historic_tree"].to_string();
    assert_eq!(doc["result"]["historic_tree"]["parent"], serde_json::json!([0, 1, 2, 3, 4, 5, 5, 7, 6]));
    let path = temp_file("h9.json", &tree);
    let back = json(&["bijection", "--tree-file", path.to_str().unwrap()]);
    assert_eq!(back["result"]["history"]["leaf_choices"], serde_json::json!([1, 1, 2, 2, 2, 3, 3, 2]));
    assert_eq!(back["result"]["round_trip"], true);
    let single = json(&["bijection", "--m", "1", "--history"]);
    assert_eq!(single["result"]["historic_tree"]["labels"], 1);
}

#[test]
fn perms_counts_and_lists() {
    let doc = json(&["bijection", "--m", "1", "--history", "1,1,2,2,2,3,3,2"]);
    let path = temp_file("worked.json", &doc["result"]["historic_tree"].to_string());
    let count = json(&["perms", "--tree-file", path.to_str().unwrap(), "--count"]);
    assert_eq!(count["result"]["count"], "1296");
    let two = json(&["perms", "--m", "1", "--perm", "2,1", "--list"]);
    assert_eq!(two["result"]["permutations"], serde_json::json!([[1, 2], [2, 1]]));
    let five = json(&["perms", "--m", "1", "--perm", "3,1,4,5,2", "--list"]);
    let n = five["result"]["permutations"].as_array().unwrap().len();
    assert_eq!(five["result"]["count"], n.to_string());
    let limited = json(&["perms", "--m", "1", "--perm", "3,1,4,5,2", "--historic", "--limit", "3"]);
    assert_eq!(limited["result"]["permutations"].as_array().unwrap().len(), 3);
}

#[test]
fn enumerate_rho_stats() {
    let counts = json(&["enumerate", "--m", "1", "--N", "6"]);
    assert_eq!(counts["result"]["h"], serde_json::json!(["1", "1", "1", "2", "4", "10", "30"]));
    let rho = json(&["rho", "--m", "2", "--N", "5000"]);
    let est = rho["result"]["estimate"]["rho"].as_f64().unwrap();
    assert!((est - 3.7746).abs() < 2e-3);
    let stats = json(&["stats", "--m", "1", "--keys", "13", "--exact"]);
    assert_eq!(stats["result"]["mean"], "6");
    assert_eq!(stats["result"]["variance"], "24/91");
    let mc = json(&["stats", "--m", "1", "--keys", "3", "--mc", "--trials", "20", "--seed", "5"]);
    assert_eq!(mc["parameters"]["seed"], 5);
    assert_eq!(mc["result"]["histogram"]["2"], 20);
    let kappa = json(&["stats", "--m", "1", "--kappa", "3"]);
    assert_eq!(kappa["result"]["kappa"][2]["value"], "105/533");
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_btree-histories"))
        .args(["rho", "--m", "1", "--N", "200"])
        .env("BTREE_HISTORIES_PRECISION", "3")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["estimate"]["rho"].as_f64().unwrap(), 2.38);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["selftest"]).status.code(), Some(0));
    assert_eq!(run(&["insert", "--m", "1", "--perm", "1,1"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "--m", "1", "--keys", "10", "--mc"]).status.code(), Some(2));
    assert_eq!(run(&["rho", "--m", "1", "--N", "5"]).status.code(), Some(2));
    assert_eq!(run(&["perms", "--tree-file", "/nonexistent/tree.json"]).status.code(), Some(2));
    let broken = temp_file("broken.json", r#"{"m":1,"labels":2,"parent":[0,0],"slot":["only","only"]}"#);
    assert_eq!(run(&["bijection", "--tree-file", broken.to_str().unwrap()]).status.code(), Some(2));
}
