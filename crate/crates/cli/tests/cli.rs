use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn qimp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qimp"))
        .args(args)
        .current_dir(root())
        .env("QIMP_COLOR", "never")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schemas").join(name)).expect("schema file");
    jsonschema::validator_for(&serde_json::from_str(&text).expect("schema json")).expect("valid schema")
}

fn assert_valid(schema_name: &str, v: &Value) {
    let errors: Vec<String> = schema(schema_name).iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

#[test]
fn check_exit_codes() {
    let o = qimp(&["check", "corpus/paper/bell.qimp"]);
    assert_eq!((code(&o), o.stdout.len(), o.stderr.len()), (0, 0, 0));
    assert_eq!(code(&qimp(&["check", "corpus/paper/empty.qimp"])), 0);

    let o = qimp(&["check", "corpus/paper/baz.qimp"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.matches("error[").count(), 1);
    assert!(err.contains("error[QB004]: Allocated qubit is not consumed"));
    assert!(err.contains("baz.qimp:2:10"));
    assert!(err.contains("   tmp = qubit()"));
    assert!(err.contains("|          ^^^^^^^"), "{err}");

    assert_eq!(code(&qimp(&["check", "does/not/exist.qimp"])), 3);
}

#[test]
fn parse_and_type_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qimp");
    std::fs::write(&bad, "def f():\n   x = = 1\n").unwrap();
    let o = qimp(&["check", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("QS002"));

    std::fs::write(&bad, "def f():\n   h(nope)\n").unwrap();
    let o = qimp(&["check", bad.to_str().unwrap(), "--emit", "json"]);
    assert_eq!(code(&o), 2);
    let v = stdout_json(&o);
    assert_valid("diagnostics.schema.json", &v);
    assert!(v["diagnostics"][0]["code"].as_str().unwrap().starts_with("QT"));
}

#[test]
fn check_json_validates() {
    for f in ["bell.qimp", "bell_already_borrowed.qimp", "main_already_consumed.qimp", "foo_not_owned.qimp", "baz.qimp"] {
        let o = qimp(&["check", &format!("corpus/paper/{f}"), "--emit", "json"]);
        assert_valid("diagnostics.schema.json", &stdout_json(&o));
    }
    let v = stdout_json(&qimp(&["check", "corpus/paper/main_already_consumed.qimp", "--emit", "json"]));
    assert_eq!(v["diagnostics"][0]["message"], "q1 already consumed");
    assert_eq!(v["diagnostics"][0]["span"]["line"], 11);
}

#[test]
fn multiple_files_share_a_namespace() {
    let o = qimp(&["run", "corpus/paper/foo.qimp", "corpus/paper/bar.qimp", "--entry", "bar"]);
    // bar takes a parameter, so it cannot be an entry point.
    assert_eq!(code(&o), 2);
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.qimp");
    std::fs::write(&main, "def main() -> bool:\n   q = qubit()\n   foo(q)\n   return bar(q)\n").unwrap();
    let o = qimp(&["diff", "corpus/paper/foo.qimp", "corpus/paper/bar.qimp", main.to_str().unwrap(), "--seeds", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lower_outputs() {
    let o = qimp(&["lower", "corpus/paper/foo.qimp"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("fn foo(qubit) -> (qubit)\n"));

    let o = qimp(&["lower", "corpus/paper/baz.qimp"]);
    assert_eq!(code(&o), 1);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("QB004"));

    for f in ["bell.qimp", "bell_main.qimp", "struct_example.qimp", "struct_example_small.qimp", "bar_main.qimp"] {
        let o = qimp(&["lower", &format!("corpus/paper/{f}"), "--emit", "ir-json"]);
        assert_eq!(code(&o), 0);
        assert_valid("ir.schema.json", &stdout_json(&o));
    }
}

#[test]
fn lower_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("foo.ir");
    let o = qimp(&["lower", "corpus/paper/foo_imperative.qimp", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let golden = std::fs::read_to_string(root().join("corpus/golden/foo_imperative.ir")).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), golden);

    let o = qimp(&["lower", "corpus/paper/foo.qimp", "-o", dir.path().join("missing/x.ir").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn run_bell_main() {
    let o = qimp(&["run", "corpus/paper/bell_main.qimp", "--entry", "main", "--seed", "7", "--shots", "100"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_valid("transcript.schema.json", &v);
    let shots = v["shots"].as_array().unwrap();
    assert_eq!(shots.len(), 100);
    assert!(shots.iter().all(|s| s["assertions"][0]["ok"] == true));
    assert!(v["error"].is_null());

    let o = qimp(&["run", "corpus/paper/bell_main.qimp", "--shots", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o), serde_json::json!({ "shots": [], "error": null }));
}

#[test]
fn run_modes_agree() {
    let a = qimp(&["run", "corpus/paper/struct_example_small.qimp", "--shots", "30", "--seed", "3"]);
    let b = qimp(&["run", "corpus/paper/struct_example_small.qimp", "--shots", "30", "--seed", "3", "--mode", "ir"]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn run_reports_dynamic_errors() {
    let o = qimp(&["run", "corpus/paper/baz_main.qimp", "--mode", "imperative"]);
    assert_eq!(code(&o), 4);
    let v = stdout_json(&o);
    assert_valid("transcript.schema.json", &v);
    assert_eq!(v["error"]["kind"], "LeakAtScopeExit");

    for (f, kind) in [("bell_already_borrowed.qimp", "DoubleBorrowAlias"), ("main_already_consumed.qimp", "UseAfterFree")] {
        let o = qimp(&["run", &format!("corpus/paper/{f}")]);
        assert_eq!(code(&o), 4);
        assert_eq!(stdout_json(&o)["error"]["kind"], kind);
    }
    // The lowered form only exists for accepted programs.
    assert_eq!(code(&qimp(&["run", "corpus/paper/baz_main.qimp", "--mode", "ir"])), 1);
}

#[test]
fn run_assertion_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.qimp");
    std::fs::write(&f, "def main():\n   q = qubit()\n   x(q)\n   assert measure(q) == False\n").unwrap();
    let o = qimp(&["run", f.to_str().unwrap(), "--shots", "5"]);
    assert_eq!(code(&o), 4);
    let v = stdout_json(&o);
    assert_eq!(v["error"]["kind"], "AssertionFailed");
    assert_eq!(v["shots"].as_array().unwrap().len(), 1);
}

#[test]
fn diff_commands() {
    let o = qimp(&["diff", "corpus/paper/bell_main.qimp", "--seeds", "100"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "100 seeds: transcripts identical\n");
    assert_eq!(code(&qimp(&["diff", "corpus/paper/foo_harness.qimp", "--seeds", "100"])), 0);
    assert_eq!(code(&qimp(&["diff", "corpus/paper/baz.qimp"])), 1);

    let o = qimp(&["diff", "corpus/paper/bar_main.qimp", "--seeds", "5", "--emit", "json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_valid("diff.schema.json", &v);
    assert!(v["divergence"].is_null());
}

#[test]
fn ast_emitters() {
    let o = qimp(&["check", "corpus/paper/bell.qimp", "--emit", "ast"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["items"].is_array());
    let o = qimp(&["check", "corpus/paper/struct_example.qimp", "--emit", "typed-ast"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["functions"][0]["name"], "example");
}

#[test]
fn color_is_opt_in() {
    let o = Command::new(env!("CARGO_BIN_EXE_qimp"))
        .args(["check", "corpus/paper/baz.qimp"])
        .current_dir(root())
        .env("QIMP_COLOR", "always")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("\x1b[1;31merror[QB004]"));
    let o = qimp(&["check", "corpus/paper/baz.qimp"]);
    assert!(!String::from_utf8_lossy(&o.stderr).contains('\x1b'));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&qimp(&[])), 2);
    assert_eq!(code(&qimp(&["check"])), 2);
    assert_eq!(code(&qimp(&["run", "corpus/paper/bell_main.qimp", "--entry", "nope"])), 2);
}
