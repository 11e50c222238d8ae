use std::path::PathBuf;
use std::process::{Command, Output};

fn manifest(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn algomarket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algomarket"))
        .args(args)
        .env_remove("ALGOMARKET_QUANTUM")
        .env_remove("ALGOMARKET_SEED")
        .env_remove("ALGOMARKET_CONFIG")
        .env_remove("ALGOMARKET_OUT")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(manifest("tests/data").join(name))
        .unwrap()
        .trim()
        .to_string()
}

#[test]
fn encode_uses_default_quantum() {
    let csv = manifest("tests/data/synthetic12.csv");
    let doc = json(&algomarket(&["encode", csv.to_str().unwrap()]));
    assert_eq!(doc["bits"], golden("synthetic12.q04.bits"));
    assert_eq!(doc["quantum"], 0.4);
    assert_eq!(doc["metadata"]["command"], "encode");

    let doc = json(&algomarket(&[
        "encode",
        csv.to_str().unwrap(),
        "--quantum",
        "0",
    ]));
    assert_eq!(doc["bits"], golden("synthetic12.q0.bits"));
}

#[test]
fn quantum_can_come_from_the_environment() {
    let csv = manifest("tests/data/synthetic12.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_algomarket"))
        .args(["encode", csv.to_str().unwrap()])
        .env("ALGOMARKET_QUANTUM", "0")
        .output()
        .unwrap();
    assert_eq!(json(&out)["bits"], golden("synthetic12.q0.bits"));
}

#[test]
fn exit_codes() {
    assert_eq!(
        algomarket(&["encode", "no-such-file.csv"]).status.code(),
        Some(2)
    );
    assert_eq!(algomarket(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad_shard = algomarket(&[
        "tm-enum",
        "--states",
        "2",
        "--shards",
        "2",
        "--shard-index",
        "2",
        "--out",
        out,
    ]);
    assert_eq!(bad_shard.status.code(), Some(1));
    let guarded = algomarket(&["tm-enum", "--states", "4", "--out", out]);
    assert_eq!(guarded.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&guarded.stderr).contains("budget"));
}

#[test]
fn tm_enum_resumes_and_merges_shards() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let base = [
        "tm-enum",
        "--states",
        "2",
        "--lengths",
        "3,4",
        "--shards",
        "3",
        "--out",
        out,
    ];
    let first = algomarket(&[&base[..], &["--shard-index", "1"]].concat());
    assert!(first.status.success());
    assert!(dir.path().join("shard-00001-of-00003.json").exists());
    assert!(!dir.path().join("distribution.json").exists());

    assert!(algomarket(&base).status.success());
    let merged: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("distribution.json")).unwrap(),
    )
    .unwrap();

    let whole_dir = tempfile::tempdir().unwrap();
    let whole_out = whole_dir.path().to_str().unwrap();
    assert!(algomarket(&[
        "tm-enum",
        "--states",
        "2",
        "--lengths",
        "3,4",
        "--out",
        whole_out
    ])
    .status
    .success());
    let whole: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(whole_dir.path().join("distribution.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(merged["distributions"], whole["distributions"]);
    assert_eq!(merged["halted"], whole["halted"]);
}

#[test]
fn ca_sample_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ca.json");
    let args = [
        "ca-sample",
        "--count",
        "100",
        "--steps",
        "30",
        "--seed",
        "4",
        "--lengths",
        "3,4",
        "--out",
        path.to_str().unwrap(),
    ];
    assert!(algomarket(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(algomarket(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn rule90_prints_one_value_per_step() {
    let out = algomarket(&["rule90", "--width", "30", "--steps", "77", "--seed", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let values: Vec<i64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 77);
}

#[test]
fn matrix_emits_csv_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = manifest("data/sample/experiment.toml");
    let out = algomarket(&[
        "matrix",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("market-market.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "pair,4,5,6,7,8,9,10");
    assert_eq!(lines.len(), 16);
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').count() == 8 && l.contains('|')));
}

#[test]
fn compare_and_dist_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.json");
    let csv = manifest("data/sample/DJIA.csv");
    let made = algomarket(&[
        "dist",
        csv.to_str().unwrap(),
        "--lengths",
        "4",
        "--out",
        dist.to_str().unwrap(),
    ]);
    assert!(made.status.success());
    let d = dist.to_str().unwrap();
    let doc = json(&algomarket(&["compare", d, d, "--length", "4"]));
    assert_eq!(doc["report"]["rho"], 1.0);
}

#[test]
fn tail_writes_csv() {
    let csv = manifest("data/sample/DJIA.csv");
    let out = algomarket(&["tail", csv.to_str().unwrap(), "--bin-width", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("bin_center,observed,expected,excess"));
}
