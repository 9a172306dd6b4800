use std::path::Path;
use std::process::{Command, Output};

fn densum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densum")).args(args).output().unwrap()
}

fn synth(path: &Path) {
    let out = densum(&[
        "synth",
        "--output",
        path.to_str().unwrap(),
        "--n-pairs",
        "2",
        "--n-matches",
        "500",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    synth(&pairs);
    let text = std::fs::read_to_string(&pairs).unwrap();
    assert_eq!(text.lines().count(), 2);

    let out = densum(&["estimate", "--input", pairs.to_str().unwrap(), "--methods", "DDD,CCC", "--k", "32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 2);
    assert!(items.iter().all(|e| e["pair_id"] == "synth-3-00000"));
    assert_eq!(items[1]["method"], "CCC");

    let out = densum(&["estimate", "--input", pairs.to_str().unwrap(), "--pair-id", "synth-3-00001", "--methods", "DDD"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["pair_id"], "synth-3-00001");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    synth(&pairs);
    let p = pairs.to_str().unwrap();

    assert_eq!(densum(&["estimate", "--input", "/nonexistent/pairs.jsonl"]).status.code(), Some(2));
    assert_eq!(densum(&["estimate", "--input", p, "--bogus"]).status.code(), Some(1));
    assert_eq!(densum(&["estimate", "--input", p, "--methods", "XYZ"]).status.code(), Some(1));
    assert_eq!(densum(&["estimate", "--input", p, "--k", "0", "--methods", "CCC"]).status.code(), Some(1));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "not json\n").unwrap();
    assert_eq!(densum(&["estimate", "--input", bad.to_str().unwrap()]).status.code(), Some(2));
}
