// SPDX-License-Identifier: Apache-2.0
mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_script-intent");
const STUB: &str = env!("CARGO_BIN_EXE_intent-stub-backend");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn fx(rel: &str) -> String {
    common::fixtures().join(rel).to_string_lossy().into_owned()
}

fn analyze(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "analyze".to_string(),
        "--script".into(),
        fx("corpus/note_flow/NoteFlowTest.java"),
        "--bundle".into(),
        fx("corpus/note_flow/bundle"),
        "--source".into(),
        fx("app"),
        "--gallery".into(),
        fx("gallery"),
        "-o".into(),
        out.to_string_lossy().into_owned(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn analyze_matches_golden_apart_from_script_path() {
    let dir = tmp();
    let out = dir.path().join("report.json");
    let o = analyze(&out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut got: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let want: Value = serde_json::from_str(&common::read("golden/note_flow.json")).unwrap();
    assert!(got["script"].as_str().unwrap().ends_with("NoteFlowTest.java"));
    got["script"] = want["script"].clone();
    assert_eq!(got, want);
}

#[test]
fn dump_paths_writes_every_path() {
    let dir = tmp();
    let out = dir.path().join("r.json");
    assert_eq!(analyze(&out, &["--dump-paths"]).status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let listed: Vec<String> = report["ops"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|op| op["evidence"]["paths"].as_array().cloned().unwrap_or_default())
        .map(|p| p.as_str().unwrap().to_string())
        .collect();
    let dumped = fs::read_to_string(PathBuf::from(format!("{}.paths", out.display()))).unwrap();
    let dumped: Vec<&str> = dumped.lines().collect();
    assert!(!dumped.is_empty());
    assert_eq!(dumped, listed);
}

#[test]
fn shorter_path_limit_is_honored() {
    let dir = tmp();
    let out = dir.path().join("r.json");
    assert_eq!(analyze(&out, &["--dump-paths", "--max-path-len", "3"]).status.code(), Some(0));
    let dumped = fs::read_to_string(format!("{}.paths", out.display())).unwrap();
    for line in dumped.lines() {
        let labels = line.split(',').nth(1).unwrap();
        assert!(labels.split(['↑', '↓']).filter(|s| !s.is_empty()).count() <= 3, "{line}");
    }
    assert_eq!(analyze(&out, &["--max-path-len", "1"]).status.code(), Some(2));
}

#[test]
fn markdown_output() {
    let dir = tmp();
    let out = dir.path().join("r.md");
    assert_eq!(analyze(&out, &["--format", "md"]).status.code(), Some(0));
    let md = fs::read_to_string(&out).unwrap();
    assert!(md.contains("btn_search"));
    assert!(serde_json::from_str::<Value>(&md).is_err());
}

#[test]
fn stub_backend_supplies_captions_and_code_intents() {
    let dir = tmp();
    let out = dir.path().join("r.json");
    let backend = format!("{STUB} --mode echo --caption stubbed");
    let o = analyze(&out, &["--backend", &backend]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let ops = report["ops"].as_array().unwrap();
    assert!(ops.iter().any(|op| op["evidence"]["caption"]["text"] == "stubbed"));
    let code = ops.iter().find(|op| op["intents"][0]["source"] == "CODE").expect("a code intent");
    assert_eq!(code["intents"][0]["confidence"], 0.7);
}

#[test]
fn failing_backend_gives_partial_result_exit_code() {
    let dir = tmp();
    let out = dir.path().join("r.json");
    let backend = format!("{STUB} --mode error");
    let o = analyze(&out, &["--backend", &backend]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["ops"].as_array().unwrap().iter().any(|op| op["evidence"]["error"].is_string()));
}

#[test]
fn unusable_inputs_exit_with_two() {
    let dir = tmp();
    let out = dir.path().join("r.json");
    let o = run(&[
        "analyze", "--script", &fx("corpus/note_flow/NoteFlowTest.java"), "--bundle", &fx("corpus/save_note/bundle"),
        "--source", &fx("app"), "--gallery", &fx("gallery"), "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "bundle without the script's operations");
    let o = run(&[
        "analyze", "--script", "/nonexistent/T.java", "--bundle", &fx("corpus/note_flow/bundle"),
        "--source", &fx("app"), "--gallery", &fx("gallery"), "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = analyze(&out, &["--backend", "/nonexistent/backend"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn eval_prints_table_and_json() {
    let c = fx("metrics/candidates.txt");
    let r = fx("metrics/references.txt");
    let o = run(&["eval", "--candidates", &c, "--references", &r]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.contains("BLEU@1"), "{table}");
    let o = run(&["eval", "--candidates", &c, "--references", &r, "--metrics", "bleu1,cider", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let expected: Value = serde_json::from_str(&common::read("metrics/expected.json")).unwrap();
    let got = v["scores"]["bleu1"].as_f64().unwrap();
    assert!((got - expected["corpus"]["bleu1"].as_f64().unwrap()).abs() < 1e-9);
    assert!(v["scores"].get("meteor").is_none());
    let o = run(&["eval", "--candidates", &c, "--references", &fx("corpus/references.tsv")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "--candidates", &c, "--references", &r, "--metrics", "bleu9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stats_over_the_corpus() {
    let o = run(&["stats", "--tests", &fx("corpus"), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["corpus"]["script_count"], 7);
    let counts: Vec<u64> = v["corpus"]["op_counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(counts.iter().sum::<u64>(), 5 + 3 + 3 + 2 + 2 + 2 + 2);
    let o = run(&["stats", "--tests", &fx("comments"), "--glob", "*.java"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("WELL_COMMENTED") && text.contains("UNCOMMENTED"), "{text}");
    assert!(text.lines().last().unwrap().starts_with("3 scripts"));
    assert_eq!(run(&["stats", "--tests", "/nonexistent"]).status.code(), Some(2));
}
