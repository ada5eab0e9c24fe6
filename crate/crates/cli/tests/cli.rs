use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hybrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SAMPLE_1: &str =
    "x = 7\nif x > 0\n  write 'x is a positive number.'\nelse\n  write 'x is a negative number.'\n";
const SAMPLE_2: &str =
    "sum=0\nfor x in [0..10]\n  if x>8\n  sum=sum+x //<----- Syntax Error\n  write 'sum= ' + sum\n";

#[test]
fn run_sample_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sample1.mp", SAMPLE_1);
    let o = hybrid(&["run", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x is a positive number.\n");
}

#[test]
fn parse_sample_two_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sample2.mp", SAMPLE_2);
    let o = hybrid(&["parse", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("INDENT_MISMATCH"), "{}", stderr(&o));
    assert!(stderr(&o).contains("sample2.mp:4:3"));
}

#[test]
fn parse_valid_file_is_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ok.mp", SAMPLE_1);
    let o = hybrid(&["parse", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
}

#[test]
fn fmt_normalizes_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "messy.mp",
        "sum=0\nfor x in [0..10]\n  if x>8\n    sum=sum+x\n    write \"sum= \"+sum\n",
    );
    let o = hybrid(&["fmt", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "sum = 0\nfor x in [0..10]\n  if x > 8\n    sum = sum + x\n    write 'sum= ' + sum\n"
    );
}

#[test]
fn blocks_matches_golden() {
    let src = core_dir().join("fixtures/programs/03_sample3.mp");
    let golden = fs::read_to_string(core_dir().join("fixtures/golden/03_sample3.blx")).unwrap();
    let o = hybrid(&["blocks", src.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden);
}

#[test]
fn run_json_trace() {
    let src = core_dir().join("fixtures/programs/03_sample3.mp");
    let o = hybrid(&["run", "--json", src.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["segments"].as_array().unwrap().len(), 10);
    assert_eq!(v["final"]["heading"], 90.0);
    assert!(v["steps"].as_u64().is_some());
}

#[test]
fn runtime_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.mp", "fd 1\nwrite nope\n");
    let o = hybrid(&["run", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains(":2: error[UNDEFINED_VARIABLE]"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hybrid(&[]).status.code(), Some(2));
    assert_eq!(hybrid(&["run"]).status.code(), Some(2));
    assert_eq!(hybrid(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        hybrid(&["run", "--step-limit", "0", "x.mp"]).status.code(),
        Some(2)
    );
    assert_eq!(
        hybrid(&["parse", "/definitely/not/here.mp"]).status.code(),
        Some(2)
    );
}

#[test]
fn palette_matches_docs() {
    let o = hybrid(&["palette"]);
    assert_eq!(o.status.code(), Some(0));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let docs =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/palette.json"))
            .unwrap();
    let docs: serde_json::Value = serde_json::from_str(&docs).unwrap();
    assert_eq!(printed, docs);
}

#[test]
fn grade_reference_submissions() {
    let corpus = core_dir().join("data/corpus.json");
    let corpus = corpus.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs");
    let o = hybrid(&["references", corpus, refs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = hybrid(&["grade", corpus, refs.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(reports.len() >= 16);
    assert!(reports.iter().all(|r| r["score"] == 100), "{reports:?}");

    let o = hybrid(&["grade", corpus, refs.to_str().unwrap()]);
    let table = stdout(&o);
    assert!(table.starts_with("task"));
    assert!(table.contains("sample-3-predict"));
    assert!(table.trim_end().ends_with("100.0"));
}

#[test]
fn grade_student_submissions() {
    let corpus = core_dir().join("data/corpus.json");
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sample-1-mod.mp", SAMPLE_1);
    write(dir.path(), "sample-2-syntax.mp", SAMPLE_2);
    write(dir.path(), "sample-3-predict.choice", "B\n");
    write(dir.path(), "sample-2-predict.choice", "C");
    let o = hybrid(&[
        "grade",
        corpus.to_str().unwrap(),
        dir.path().to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    let score = |id: &str| {
        reports.iter().find(|r| r["task_id"] == id).unwrap()["score"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(score("sample-1-mod"), 67);
    assert_eq!(score("sample-2-syntax"), 0);
    assert_eq!(score("sample-3-predict"), 0);
    assert_eq!(score("sample-2-predict"), 100);
    assert_eq!(score("mod-even-odd"), 0);
    let syntax = reports
        .iter()
        .find(|r| r["task_id"] == "sample-2-syntax")
        .unwrap();
    assert_eq!(syntax["detail"]["cases"][0]["outcome"], "SYNTAX");
}

#[test]
fn malformed_corpus_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "corpus.json", "");
    let o = hybrid(&["grade", &c, dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CORPUS_MALFORMED"));
}
