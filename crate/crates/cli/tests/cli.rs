use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voyagegraph"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, docs: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    ok(&["synth", "--documents", &docs.to_string(), "--seed", &seed.to_string(), "--out", s(&out)]);
    out
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&ok(args)).unwrap()
}

#[test]
fn synth_output_validates_and_has_manifest() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 10, 4);
    let out = run(&["validate", s(&corpus), "--strict"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "synth");
    assert_eq!(manifest["seeds"]["synth"], 4);
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn validate_reports_violations_with_exit_code_one() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 3, 1);
    let text = std::fs::read_to_string(&corpus).unwrap();
    let mut first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let bad = first["graph"]["inclusion"][0].clone();
    // A self loop on an existing child.
    let child = bad[1].clone();
    first["graph"]["inclusion"].as_array_mut().unwrap().push(serde_json::json!([child, child]));
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[0] = serde_json::to_string(&first).unwrap();
    let broken = dir.path().join("broken.jsonl");
    std::fs::write(&broken, lines.join("\n") + "\n").unwrap();
    let out = run(&["validate", s(&broken)]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(first["id"].as_str().unwrap()));
}

#[test]
fn missing_input_exits_two() {
    let out = run(&["stats", "/nonexistent/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn split_is_seeded_and_partitions() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 20, 2);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["split", s(&corpus), "--seed", "9", "--out-dir", s(&a)]);
    ok(&["split", s(&corpus), "--seed", "9", "--out-dir", s(&b)]);
    let mut all = Vec::new();
    for (name, n) in [("train", 14), ("dev", 2), ("test", 4)] {
        let x = std::fs::read_to_string(a.join(format!("{name}.txt"))).unwrap();
        let y = std::fs::read_to_string(b.join(format!("{name}.txt"))).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.lines().count(), n);
        all.extend(x.lines().map(str::to_string));
    }
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 20);
    assert!(a.join("split.manifest.json").exists());
}

#[test]
fn flat_irp_scores_depth_one_only() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 8, 5);
    let pred = dir.path().join("flat.jsonl");
    ok(&["predict-irp", s(&corpus), "--system", "flat", "--out", s(&pred)]);
    let v = json(&["evaluate", "--gold", s(&corpus), "--pred", s(&pred), "--task", "irp", "--json"]);
    let pooled = &v["report"]["pooled"];
    assert_eq!(pooled["breakdowns"]["depth=1"]["f1"], 1.0);
    assert_eq!(pooled["breakdowns"]["depth>=2"]["f1"], 0.0);
    let tp = pooled["tp"].as_f64().unwrap();
    let gold = tp + pooled["fn"].as_f64().unwrap();
    assert!((pooled["f1"].as_f64().unwrap() - tp / gold).abs() < 1e-12);
    assert_eq!(v["manifest"]["command"], "evaluate");
}

#[test]
fn oracle_predictions_score_perfectly() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 6, 6);
    for (cmd, task, extra) in [
        ("predict-vsp", "vsp", vec![]),
        ("predict-irp", "irp", vec![]),
        ("predict-trp", "trp", vec!["--decoder", "seqsort"]),
        ("predict-trp", "trp", vec!["--decoder", "naive"]),
    ] {
        let pred = dir.path().join(format!("{cmd}.jsonl"));
        let mut args = vec![cmd, s(&corpus), "--system", "oracle", "--out", s(&pred)];
        args.extend(extra);
        ok(&args);
        let v = json(&["evaluate", "--gold", s(&corpus), "--pred", s(&pred), "--task", task, "--json"]);
        let f1 = if task == "vsp" { &v["report"]["accuracy"] } else { &v["report"]["pooled"]["f1"] };
        assert_eq!(f1.as_f64(), Some(1.0), "{cmd} {task}");
    }
}

#[test]
fn occorder_em_never_recovers_reverse_pairs() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 10, 7);
    let pred = dir.path().join("em.jsonl");
    ok(&["predict-trp", s(&corpus), "--system", "occorder-em", "--out", s(&pred)]);
    let v = json(&["evaluate", "--gold", s(&corpus), "--pred", s(&pred), "--task", "trp", "--json"]);
    let rev = &v["report"]["pooled"]["breakdowns"]["rev"];
    assert_eq!(rev["tp"], 0);
    assert!(rev["fn"].as_u64().unwrap() > 0);
}

#[test]
fn predictions_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a.jsonl", 5, 11);
    let b = synth(dir.path(), "b.jsonl", 5, 11);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for (cmd, system) in [("predict-irp", "random"), ("predict-trp", "random"), ("predict-vsp", "majority")] {
        let x = dir.path().join("x.jsonl");
        let y = dir.path().join("y.jsonl");
        ok(&[cmd, s(&a), "--system", system, "--seed", "3", "--out", s(&x)]);
        ok(&[cmd, s(&a), "--system", system, "--seed", "3", "--out", s(&y)]);
        assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap(), "{cmd} {system}");
    }
    let r1 = ok(&["stats", s(&a), "--json"]);
    let r2 = ok(&["stats", s(&b), "--json"]);
    assert_eq!(r1, r2);
}

#[test]
fn unsupported_system_is_rejected() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 2, 1);
    let out = run(&["predict-irp", s(&corpus), "--system", "majority", "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn self_agreement_is_perfect() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c.jsonl", 4, 3);
    let v = json(&["iaa", s(&corpus), s(&corpus), "--json"]);
    for level in ["mention", "entity", "inclusion", "transition"] {
        assert_eq!(v["report"][level]["f1"], 1.0, "{level}");
    }
    assert_eq!(v["report"]["mention"]["kappa"], 1.0);
    assert!(v["report"]["inclusion"]["kappa"].is_null());
}

#[test]
fn mismatched_documents_are_an_error() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a.jsonl", 3, 1);
    let b = synth(dir.path(), "b.jsonl", 2, 1);
    let out = run(&["evaluate", "--gold", s(&a), "--pred", s(&b), "--task", "vsp"]);
    assert_eq!(out.status.code(), Some(2));
}
