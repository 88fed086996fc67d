use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cxmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxmix"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = cxmix(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn small_dataset(dir: &Path) {
    ok(dir, &["--seed", "1", "synth-vr", "--n-per-class", "6", "--points", "12", "-o", "data.jsonl"]);
}

fn data_lines(text: &str) -> Vec<Value> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| serde_json::from_str(l).unwrap())
        .filter(|v: &Value| v.get("provenance").is_none() || v.get("id").is_some())
        .collect()
}

#[test]
fn augment_then_eval_reports_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    ok(d, &["--seed", "2", "augment", "-i", "data.jsonl", "-o", "aug.jsonl", "--data-scheme", "cvx"]);
    let aug = std::fs::read_to_string(d.join("aug.jsonl")).unwrap();
    assert_eq!(data_lines(&aug).len(), 24);

    ok(
        d,
        &[
            "--seed", "3", "eval", "-i", "data.jsonl", "--metrics", "m.csv", "--summary", "s.json",
            "--seeds", "10", "--schemes", "cvx/cvx,linear/logit", "--set", "iterations=200",
        ],
    );
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    for pair in [("cvx", "cvx"), ("linear", "logit"), ("none", "none")] {
        let n = rows.iter().filter(|r| (&r[0], &r[1]) == pair).count();
        assert_eq!(n, 10, "{pair:?}");
    }
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"].as_array().unwrap().len(), 3);
}

#[test]
fn random_bound_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--seed", "9", "check-bound", "-o", "bound.json", "--draws", "60"]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("bound.json")).unwrap()).unwrap();
    assert_eq!(doc["violations"], 0);
    assert_eq!(doc["results"].as_array().unwrap().len(), 60);
}

#[test]
fn zero_complexon_samples_empty_complexes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let zero = r#"{"n":2,"max_dim":2,"levels":{"1":[0,0,0,0],"2":[0,0,0,0,0,0,0,0]},"id":"zero","label":[1.0]}"#;
    std::fs::write(d.join("w.jsonl"), format!("{zero}\n")).unwrap();
    ok(d, &["sample", "-i", "w.jsonl", "-o", "s.jsonl", "--count", "3", "--nodes", "9"]);
    let recs = data_lines(&std::fs::read_to_string(d.join("s.jsonl")).unwrap());
    assert_eq!(recs.len(), 3);
    for r in recs {
        assert_eq!(r["n"], 9);
        assert_eq!(r["simplices"].as_array().unwrap().len(), 0, "{r}");
    }

    let out = cxmix(d, &["sample", "-i", "w.jsonl", "-o", "s2.jsonl"]);
    assert_eq!(out.status.code(), Some(1), "sampling without a node count is a usage error");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(cxmix(d, &["--help"]).status.code(), Some(0));
    assert_eq!(cxmix(d, &["estimate", "--no-such-flag"]).status.code(), Some(1));
    small_dataset(d);
    let bad_key = cxmix(d, &["estimate", "-i", "data.jsonl", "-o", "e.jsonl", "--set", "nonsense=3"]);
    assert_eq!(bad_key.status.code(), Some(1));
    let bad_tau = cxmix(d, &["estimate", "-i", "data.jsonl", "-o", "e.jsonl", "--tau", "1.5"]);
    assert_eq!(bad_tau.status.code(), Some(1));

    let missing = cxmix(d, &["estimate", "-i", "absent.jsonl", "-o", "e.jsonl"]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(d.join("broken.jsonl"), "{\"id\": \"x\"\n").unwrap();
    let broken = cxmix(d, &["homdensity", "-i", "broken.jsonl", "-o", "h.csv"]);
    assert_eq!(broken.status.code(), Some(2));
    let left: Vec<String> = std::fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(!left.iter().any(|n| n == "e.jsonl" || n == "h.csv"), "{left:?}");
    assert_eq!(left.len(), 2, "no temporary files left behind: {left:?}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    std::fs::write(d.join("run.cfg"), "# settings\ntau = 0.3\nh = 3\n").unwrap();
    ok(d, &["--config", "run.cfg", "estimate", "-i", "data.jsonl", "-o", "e.jsonl", "--tau", "0.7"]);
    let text = std::fs::read_to_string(d.join("e.jsonl")).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let cfg = &header["provenance"]["config"];
    assert_eq!(cfg["tau"], "0.7");
    assert_eq!(cfg["h"], "3");
    assert_eq!(header["provenance"]["command"], "estimate");
    let first: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(first["n"], 4, "12 nodes in bins of 3");
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    for t in ["1", "2"] {
        ok(d, &["--seed", "5", "--threads", t, "augment", "-i", "data.jsonl", "-o", &format!("a{t}.jsonl")]);
        ok(d, &["--seed", "5", "--threads", t, "homdensity", "-i", "data.jsonl", "-o", &format!("h{t}.csv")]);
    }
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a1.jsonl"), read("a2.jsonl"));
    assert_eq!(read("h1.csv"), read("h2.csv"));
}

#[test]
fn mixup_export_has_the_lambda_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    ok(d, &["estimate", "-i", "data.jsonl", "-o", "w.jsonl"]);
    ok(
        d,
        &["--seed", "4", "mixup", "-i", "w.jsonl", "-o", "mix.jsonl", "--export", "path.json", "--data-scheme", "cvx"],
    );
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(d.join("path.json")).unwrap()).unwrap();
    let grid = doc["clusterpath"]["lambda_grid"].as_array().unwrap();
    assert_eq!(grid.len(), 50);
    let parts = doc["clusterpath"]["partitions"].as_array().unwrap();
    assert_eq!(parts[0].as_array().unwrap().len(), 12, "nothing fused at the first grid point");
    assert_eq!(data_lines(&std::fs::read_to_string(d.join("mix.jsonl")).unwrap()).len(), 12);
}
