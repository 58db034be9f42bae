use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fsk_cli::{parse_input, run, ExampleName, ModeRequest, ProblemSpec, RunOptions};
use serde_json::Value;

fn fsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Scalar kernel with `d = 1`, `N = 1` and `K(1, 1) > K(∅, ∅)`: positive but
/// not dominated.
const UNDOMINATED: &str = r#"{"kind":"kernel","d":1,"N":1,"dim_h":1,"entries":[
    {"row":[],"col":[],"block":[[[1.0,0.0]]]},
    {"row":[],"col":[1],"block":[[[0.0,0.0]]]},
    {"row":[1],"col":[1],"block":[[[2.0,0.0]]]}]}"#;

#[test]
fn example_one_verifies_in_boundary_mode() {
    let out = fsk(&["example", "d1", "--stage", "verify", "--mode", "boundary"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let v = &report["verification"]["report"];
    assert_eq!(v["mode"], "boundary");
    assert!(v["e1_max_dev"]["value"].as_f64().unwrap() <= 1e-12);
    assert!(v["e3_max_dev"]["value"].as_f64().unwrap() <= 1e-12);
    assert!(v["e1_max_dev"]["tolerance"].as_f64().is_some());
}

#[test]
fn example_two_consistency_is_an_analytic_negative() {
    let out = fsk(&["example", "d2", "--stage", "consistency"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let violations = report["consistency"]["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0]["kind"], "b3-mismatch");
    assert!((violations[0]["magnitude"].as_f64().unwrap() - 0.0625).abs() < 1e-12);

    let out = fsk(&["example", "d2", "--stage", "verify", "--mode", "boundary"]);
    assert_eq!(out.status.code(), Some(1));
    let out = fsk(&["example", "d2", "--stage", "verify", "--mode", "interior"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fsk(&["example", "d2"]).status.code(), Some(1));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write(dir.path(), "bad.json", "not json");
    let out = fsk(&["check", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid input"));

    let unknown = write(dir.path(), "extra.json", r#"{"kind":"moments","s":[1],"bogus":true}"#);
    assert_eq!(fsk(&["check", unknown.to_str().unwrap()]).status.code(), Some(2));

    let missing = write(
        dir.path(),
        "missing.json",
        r#"{"kind":"kernel","d":1,"N":1,"dim_h":1,"entries":[{"row":[],"col":[],"block":[[[1.0,0.0]]]}]}"#,
    );
    assert_eq!(fsk(&["check", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(fsk(&["check", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(fsk(&["example", "d7"]).status.code(), Some(2));
}

#[test]
fn dominance_failure_in_check_and_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "k.json", UNDOMINATED);
    let out = fsk(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["check"]["passes"], false);
    assert!((report["check"]["dominance"]["dominance"]["min_eig"].as_f64().unwrap() + 1.0).abs() < 1e-12);

    let out = fsk(&["extend", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["stage_error"]["stage"], "extend");
}

#[test]
fn reports_are_deterministic() {
    let a = fsk(&["example", "d2"]);
    let b = fsk(&["example", "d2"]);
    assert_eq!(a.stdout, b.stdout);
    let path = fixture("example_d1.json");
    let c = fsk(&["analyze", path.to_str().unwrap()]);
    let d = fsk(&["analyze", path.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn out_file_and_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = write(dir.path(), "pairs.json", "[[[1],[2]],[[1],[1]],[[1,1,1],[1,1,1]]]");
    let report_path = dir.path().join("report.json");
    let input = fixture("example_d1.json");
    let out = fsk(&[
        "extend",
        input.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
        "--mode",
        "interior",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exit status: 0"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let values = report["extension"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 3);
    let re = |k: usize| values[k]["block"][0][0][0].as_f64().unwrap();
    assert!(re(0).abs() < 1e-12);
    assert!((re(1) - 0.25).abs() < 1e-12);
    assert!(re(2).abs() < 1e-12);

    let long = write(dir.path(), "long.json", "[[[1,1,1,1,1],[]]]");
    let out = fsk(&["extend", input.to_str().unwrap(), "--pairs", long.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hausdorff_command() {
    let out = fsk(&["hausdorff", fixture("delta_half.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let recovery = &json(&out)["hausdorff"]["recovery"];
    assert!(recovery["max_deviation"].as_f64().unwrap() <= 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "s.json", r#"{"kind":"moments","s":[1,0.9,0.5]}"#);
    let out = fsk(&["hausdorff", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let worst = &json(&out)["hausdorff"]["monotone"]["worst"];
    assert_eq!((worst["k"].as_u64(), worst["j"].as_u64()), (Some(2), Some(0)));

    let measure = write(dir.path(), "m.json", r#"{"kind":"measure","atoms":[{"x":0.25,"w":1},{"x":0.75,"w":2}],"N":3}"#);
    assert_eq!(fsk(&["hausdorff", measure.to_str().unwrap()]).status.code(), Some(0));

    let out = fsk(&["hausdorff", fixture("example_d1.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_example_round_trips() {
    for name in ExampleName::ALL {
        let text = std::fs::read_to_string(fixture(name.file_name())).unwrap();
        let spec = parse_input(&text).unwrap();
        let again = parse_input(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
    }
    let measure = parse_input(r#"{"kind":"measure","atoms":[{"x":1,"w":1}],"options":{"psd_tol":1e-9}}"#).unwrap();
    assert_eq!(parse_input(&measure.to_json()).unwrap(), measure);
}

#[test]
fn library_run_matches_binary() {
    let spec: ProblemSpec = ExampleName::D1.spec();
    let report = run(
        &spec,
        fsk_cli::Command::Verify,
        &RunOptions {
            mode: ModeRequest::Boundary,
            ..RunOptions::default()
        },
    );
    let out = fsk(&["example", "d1", "--stage", "verify", "--mode", "boundary"]);
    assert_eq!(fsk_cli::report_json(&report).as_bytes(), &out.stdout[..]);
}
