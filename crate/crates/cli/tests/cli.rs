use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ellis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellis"))
        .args(args)
        .output()
        .expect("spawn ellis")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn catalog_lists_models_in_stable_order() {
    let a = ellis(&["catalog", "--format", "json"]);
    let b = ellis(&["catalog", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rows = stdout_json(&a);
    let names: Vec<&str> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"square-map"));
    assert!(names.contains(&"periodic-stack"));
}

#[test]
fn empty_pipeline_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "name = \"empty\"\n");
    let out = ellis(&["run", &cfg, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["name"], "empty");
    assert_eq!(r["steps"].as_array().unwrap().len(), 0);
}

#[test]
fn emits_json_csv_and_text_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "gm.toml",
        "name = \"gm\"\n[output]\nformats = [\"json\", \"csv\", \"text\"]\n\n[[pipeline]]\nop = \"entropy\"\nshift = \"golden-mean\"\nn_max = 20\n",
    );
    let out_dir = dir.path().join("out");
    let out = ellis(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["verdict"], "pass");
    assert!(report.get("timings").is_none());
    assert!(out_dir.join("timings.json").exists());
    assert!(out_dir.join("report.txt").exists());
    let csv = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv"))
        .expect("csv file");
    let body = fs::read_to_string(csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("n,count,rate"));
    assert_eq!(lines.count(), 20);
}

#[test]
fn failed_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[[pipeline]]\nop = \"entropy\"\nshift = \"golden-mean\"\nn_max = 12\nexpect = { \"/spectral\" = 0.5 }\n",
    );
    let out = ellis(&["run", &cfg, "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let r = stdout_json(&out);
    assert_eq!(r["summary"]["expectation_failures"], 1);
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[[pipeline]]\nop = \"no-such-op\"\n",
    );
    let out = ellis(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let missing = ellis(&["run", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn semigroup_subcommand_reads_table() {
    let dir = tempfile::tempdir().unwrap();
    // Z/2 with identity 0.
    let table = write(dir.path(), "z2.json", r#"{"table": [[0, 1], [1, 0]]}"#);
    let out = ellis(&[
        "semigroup",
        &table,
        "idempotents",
        "kernel",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    let result = &r["steps"][0]["result"];
    assert_eq!(result["idempotents"].as_array().unwrap().len(), 1);
}

#[test]
fn shift_subcommand_accepts_file_and_preset() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "gm.json",
        r#"{"alphabet": "01", "kind": "forbidden", "blocks": ["11"]}"#,
    );
    let from_file = ellis(&[
        "shift",
        &spec,
        "language-counts",
        "--n-max",
        "10",
        "--format",
        "json",
    ]);
    let from_preset = ellis(&[
        "shift",
        "golden-mean",
        "language-counts",
        "--n-max",
        "10",
        "--format",
        "json",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    let a = stdout_json(&from_file);
    let b = stdout_json(&from_preset);
    assert_eq!(a["steps"][0]["result"], b["steps"][0]["result"]);
}

#[test]
fn envelope_subcommand_prints_text() {
    let out = ellis(&["envelope", "periodic-stack", "--param", "n=2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[0] envelope (ok)"));
    assert!(text.contains("[1] semigroup (ok)"));
}

#[test]
fn unknown_model_is_reported() {
    let out = ellis(&["props", "no-such-model", "recurrence"]);
    assert_ne!(out.status.code(), Some(0));
}
