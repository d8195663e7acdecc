use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn symred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symred")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn prob(name: &str) -> String {
    corpus().join(name).display().to_string()
}

#[test]
fn check_symmetry_example() {
    let o = symred(&["check-symmetry", "--problem", &prob("ex3_2.prob"), "--field", "X5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("symmetric"), "{out}");
    assert!(out.contains("pass"), "{out}");
}

#[test]
fn commutator_example() {
    let o = symred(&["commutator", "--problem", &prob("blasius.prob"), "--fields", "X1,X2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("\u{2212}1\u{b7}X1"), "{}", stdout(&o));
}

#[test]
fn json_single_op() {
    let o = symred(&["--json", "classify", "--problem", &prob("ex2_3.prob"), "--field", "X1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["problem"], "ex2_3");
    assert_eq!(v["operation"], "classify");
    assert_eq!(v["verdict"], "pass");
    assert!(v["wall_time_ms"].is_null());
}

#[test]
fn adhoc_check_has_natural_verdict() {
    // no check in the file asks for this bracket, so there is nothing to compare against
    let o = symred(&["commutator", "--problem", &prob("ex3_2.prob"), "--fields", "X3,X5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("2\u{b7}X3"), "{}", stdout(&o));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(symred(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_2() {
    let o = symred(&["prolong", "--problem", "/nonexistent.prob", "--field", "X"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_field_exits_2() {
    let o = symred(&["prolong", "--problem", &prob("ex2_3.prob"), "--field", "Q"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `Q`"));
}

#[test]
fn empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = symred(&["run-corpus", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0 pass, 0 fail, 0 discrepancy-documented, 0 inconclusive");
}

#[test]
fn missing_directory_exits_2() {
    assert_eq!(symred(&["run-corpus", "--dir", "/no/such/dir"]).status.code(), Some(2));
}

#[test]
fn filter_selects_problem() {
    let o = symred(&["--json", "run-corpus", "--dir", corpus().to_str().unwrap(), "--filter", "blasius"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(!out.is_empty());
    for line in out.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["problem"], "blasius");
    }
}

#[test]
fn json_is_reproducible_across_runs_and_executors() {
    let dir = corpus();
    let dir = dir.to_str().unwrap();
    let a = symred(&["--json", "run-corpus", "--dir", dir]);
    let b = symred(&["--json", "run-corpus", "--dir", dir]);
    let c = symred(&["--json", "--sequential", "run-corpus", "--dir", dir]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a), stdout(&c));
}

#[test]
fn timing_fills_wall_time() {
    let o = symred(&["--json", "--timing", "prolong", "--problem", &prob("ex2_3.prob"), "--field", "X2"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn full_corpus_passes() {
    let o = symred(&["run-corpus", "--dir", corpus().to_str().unwrap()]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    let summary = out.lines().last().unwrap();
    assert!(summary.contains(" 0 fail"), "{summary}");
    assert!(!summary.starts_with("0 pass"), "{summary}");
    assert!(summary.contains("2 discrepancy-documented"), "{summary}");
    assert!(summary.ends_with("0 inconclusive"), "{summary}");
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const HEAD: &str = "id = \"t\"\nanchor = \"test\"\n\n[space]\nindependent = [\"x\"]\ndependent = [\"y\"]\norder = 2\n\n";

#[test]
fn validation_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("empty.prob", "[systems.main]\nequations = []\n", "empty equations list"),
        ("undeclared.prob", "[systems.main]\nequations = [\"y'' - z\"]\n", "undeclared variable `z`"),
        ("syntax.prob", "[systems.main\nequations = [\"y''\"]\n", "line"),
    ];
    for (file, body, want) in cases {
        let p = write(dir.path(), file, &format!("{HEAD}{body}"));
        let o = symred(&["prolong", "--problem", &p, "--field", "X"]);
        assert_eq!(o.status.code(), Some(2), "{file}");
        assert!(stderr(&o).contains(want), "{file}: {}", stderr(&o));
    }
}

#[test]
fn corpus_with_bad_file_skips_it_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(corpus().join("ex2_4.prob"), dir.path().join("ex2_4.prob")).unwrap();
    write(dir.path(), "broken.prob", &format!("{HEAD}[systems.main]\nequations = []\n"));
    let o = symred(&["run-corpus", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("skipped"), "{}", stderr(&o));
    assert!(stdout(&o).contains("ex2_4"));
}

#[test]
fn failing_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[systems.main]\nequations = [\"y''\"]\n\n[fields]\nX = { y = \"1\" }\n\n\
                [[checks]]\nop = \"check-symmetry\"\nprovenance = \"derived\"\nfield = \"X\"\nexpect = false\n";
    let p = write(dir.path(), "wrong.prob", &format!("{HEAD}{body}"));
    let o = symred(&["check-symmetry", "--problem", &p, "--field", "X"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("fail"));
}
