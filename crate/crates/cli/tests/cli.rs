use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn orbitdex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitdex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn fixture(name: &str) -> String {
    fixture_dir().join(name).to_string_lossy().into_owned()
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn check_accepts_fixture() {
    let o = orbitdex(&["--no-timing", "check", &fixture("worked_2d.germ")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("OK"));
}

#[test]
fn check_lists_non_resonant_terms() {
    let o = orbitdex(&["check", &data("non_resonant.germ")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("x1^2"));
    assert!(!stdout(&o).contains("x1^3"));
}

#[test]
fn check_reports_non_isolated() {
    let o = orbitdex(&["--json", "check", &data("not_isolated.germ")]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["isolated"], Value::Bool(false));
    assert!(v["diagnostic"].as_str().unwrap().contains("x1 = 0"));
}

#[test]
fn parse_errors_exit_two_with_position() {
    let o = orbitdex(&["check", &data("bad_syntax.germ")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":5:16:"));
    assert_eq!(orbitdex(&["check", &data("missing.germ")]).status.code(), Some(2));
    assert_eq!(orbitdex(&["matrix", "pe", "[(1,2"]).status.code(), Some(2));
    assert_eq!(orbitdex(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn mult_map_only() {
    let o = orbitdex(&["--no-timing", "mult", "--map-only", &data("map_only.germ")]);
    assert_eq!(stdout(&o).trim(), "6");
    let o = orbitdex(&["--json", "--no-timing", "mult", "--map-only", &data("map_only.germ")]);
    let v = json(&o);
    assert_eq!(v["value"], 6);
    assert_eq!(v["fast_path"], true);
}

#[test]
fn index_routes_agree() {
    let o = orbitdex(&["--json", "--no-timing", "index", &fixture("cubic_flip.germ"), "--q", "2", "--route", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["mu"], 3);
    assert_eq!(v["route"], "both_agree");
}

#[test]
fn spectrum_schema_and_determinism() {
    let args = ["--json", "--no-timing", "spectrum", &fixture("worked_2d.germ")];
    let (a, b) = (orbitdex(&args), orbitdex(&args));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["pe"], serde_json::json!([2, 3, 6]));
    assert_eq!(v["counts"], serde_json::json!({"1": 1, "2": 1, "3": 1, "6": 1}));
    assert_eq!(v["checks"], serde_json::json!({"f37": true, "direct": true}));
    assert!(v.get("elapsed_ms").is_none());
    let timed = json(&orbitdex(&["--json", "spectrum", "--no-cross-check", &fixture("worked_2d.germ")]));
    assert!(timed["elapsed_ms"].is_u64());
    assert_eq!(timed["checks"]["direct"], false);
}

#[test]
fn matrix_questions() {
    let o = orbitdex(&["--json", "matrix", "universal", "[(1,2,1);(1,3,1)]"]);
    let v = json(&o);
    assert_eq!(v["universal"], true);
    assert_eq!(v["mode"], "chain-plus-coprime-block");
    let o = orbitdex(&["--json", "matrix", "universal", "[(1,2,1);(1,3,1);(1,5,1)]"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["universal"], false);
    let o = orbitdex(&["--no-timing", "matrix", "pe", "[(1,2,1);(1,3,1)]"]);
    assert_eq!(stdout(&o).trim(), "{2, 3, 6}");
    let o = orbitdex(&["--no-timing", "matrix", "order", "[(1,2,1)]", "[(1,2,1);(1,3,1)]"]);
    assert_eq!(stdout(&o).trim(), "true");
}

#[test]
fn admissible_and_realize() {
    let o = orbitdex(&["admissible", "[(1,2,1);(1,3,1)]", "--seq", "2:1,3:0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = orbitdex(&["admissible", "[(1,2,1);(1,3,1)]", "--seq", "2:1,3:1,6:4"]);
    assert_eq!(o.status.code(), Some(0));

    let out = std::env::temp_dir().join(format!("orbitdex-realize-{}.germ", std::process::id()));
    let out_s = out.to_string_lossy().into_owned();
    let o = orbitdex(&["realize", "[(1,2,1);(1,6,1)]", "--seq", "1:1,2:2,6:3", "-o", &out_s]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&orbitdex(&["--json", "--no-timing", "spectrum", &out_s]));
    assert_eq!(v["counts"], serde_json::json!({"1": 1, "2": 2, "6": 3}));
    fs::remove_file(out).ok();

    let o = orbitdex(&["realize", "[(1,2,1);(1,3,1);(1,5,1)]", "--seq", "2:1,3:1,5:1,6:1,10:1,15:1,30:1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not universal"));
}

#[test]
fn lemma42_output() {
    let v = json(&orbitdex(&["--json", "--no-timing", "lemma42", "--a", "2,4", "--r", "1,1"]));
    assert_eq!(v["k"], 1);
    assert_eq!(v["strict"], true);
    let o = orbitdex(&["lemma42", "--a", "4", "--r", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn paper_suite_filter() {
    let o = orbitdex(&["--json", "--no-timing", "paper-suite", "--filter", "example31_2_6_5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    let names: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["fixture/example31_2_6_5", "fixture/example31_2_6_5_large"]);
}

#[test]
fn paper_suite_names_corrupted_fixture() {
    let dir = std::env::temp_dir().join(format!("orbitdex-suite-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    for f in ["cubic_flip.germ", "cubic_flip.expected.json", "worked_2d.germ", "worked_2d.expected.json"] {
        fs::copy(fixture_dir().join(f), dir.join(f)).unwrap();
    }
    let sidecar = dir.join("worked_2d.expected.json");
    let text = fs::read_to_string(&sidecar).unwrap().replace("\"6\": 12", "\"6\": 13");
    fs::write(&sidecar, text).unwrap();
    let d = dir.to_string_lossy().into_owned();

    let o = orbitdex(&["--no-timing", "paper-suite", "--fixtures", &d, "--filter", "fixture/"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("PASS  fixture/cubic_flip"), "{out}");
    assert!(out.contains("FAIL  fixture/worked_2d"), "{out}");

    let o = orbitdex(&["--no-timing", "paper-suite", "--fixtures", &d, "--bless"]);
    assert_eq!(o.status.code(), Some(0));
    let o = orbitdex(&["--no-timing", "paper-suite", "--fixtures", &d, "--filter", "fixture/"]);
    assert_eq!(o.status.code(), Some(0));
    fs::remove_dir_all(dir).ok();
}
