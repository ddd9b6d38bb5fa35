use std::fs;

use efsm_des_cli::dispatch;
use efsm_des_testkit::COUNTER_JSON;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn efsmdes(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("efsmdes").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn workspace() -> (TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counter.json");
    fs::write(&path, COUNTER_JSON).unwrap();
    let path = path.to_str().unwrap().to_string();
    (dir, path)
}

#[test]
fn validate_reports_the_signature() {
    let (_dir, file) = workspace();
    let r = efsmdes(&["validate", &file]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("2 states, 1 inputs, 2 outputs, 1 variables"));
    assert!(r.out.contains("initial: (I, v=0)"));
}

#[test]
fn validate_rejects_bad_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, COUNTER_JSON.replace("\"v\": 0}}", "\"v\": 12}}")).unwrap();
    let r = efsmdes(&["validate", path.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("init.vals.v"), "{}", r.err);
    let r = efsmdes(&["validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(r.code, 1);
}

#[test]
fn simulate_three_steps() {
    let (_dir, file) = workspace();
    let r = efsmdes(&["simulate", &file, "--inputs", "a", "--steps", "3"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out, "outputs: m m m\nfinal: (I, v=3)\n");
    let r = efsmdes(&["simulate", &file, "--inputs", "a,a"]);
    assert_eq!(r.out, "outputs: m m\nfinal: (I, v=2)\n");
    let r = efsmdes(&["simulate", &file, "--inputs", "b"]);
    assert_eq!(r.code, 1);
}

#[test]
fn regex_with_anchor() {
    let (_dir, file) = workspace();
    for from in ["efsm", "coupled"] {
        let r = efsmdes(&["regex", &file, "--anchor", "I,v=2", "--from", from]);
        assert_eq!(r.code, 0, "{}", r.err);
        assert!(r.out.contains("input: a^2 (a^14)*\n"));
        assert!(r.out.contains("output: m^2 (m^6 n^7 m)*\n"));
        assert!(r.out.contains("combined: (a/m)^2 ((a/m)^6 (a/n)^7 (a/m))*\n"));
    }
    let r = efsmdes(&["regex", &file, "--anchor", "I,v=9"]);
    assert_eq!(r.code, 1);
    let r = efsmdes(&["regex", &file, "--anchor", "I,v"]);
    assert_eq!(r.code, 2);
}

#[test]
fn equiv_text_and_json() {
    let (_dir, file) = workspace();
    let r = efsmdes(&["equiv", &file, "--horizon", "50"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("equivalent"));
    let r = efsmdes(&["equiv", &file, "--horizon", "10", "--json"]);
    assert_eq!(r.code, 0);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["verdict"], "equivalent");
    assert_eq!(v["horizon"], 10);
    assert!(v["counterexample"].is_null());
    let r = efsmdes(&["equiv", &file, "--horizon", "5", "--state-cap", "3"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("cap"));
}

#[test]
fn extraction_commands_write_dot() {
    let (dir, file) = workspace();
    let dot = dir.path().join("g.dot");
    let r = efsmdes(&["extract-des", &file, "--dot", dot.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("transitions: 4"));
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let r = efsmdes(&["extract-sup", &file]);
    assert!(r.out.contains("states: 20\ninitial: (I, v=0)"));
    assert!(r.out.contains("complete: false"));

    let r = efsmdes(&["reduce", &file, "--dot", "-"]);
    assert!(r.out.starts_with("states: 16\n"));
    assert!(r.out.contains("digraph automaton"));

    let r = efsmdes(&["product", &file]);
    assert!(r.out.starts_with("states: 16\n"));
}

#[test]
fn codegen_to_file_and_stdout() {
    let (dir, file) = workspace();
    let out = dir.path().join("counter.c");
    assert_eq!(efsmdes(&["codegen", &file, "-o", out.to_str().unwrap()]).code, 0);
    let code = fs::read_to_string(&out).unwrap();
    assert!(code.contains("if(v>7)"));
    assert_eq!(efsmdes(&["codegen", &file]).out, code);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(efsmdes(&[]).code, 2);
    assert_eq!(efsmdes(&["frobnicate"]).code, 2);
    assert_eq!(efsmdes(&["equiv", "x.json"]).code, 2);
    let help = efsmdes(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("simulate"));
}
