//! Command-line behavior: exit statuses, golden outputs, determinism and
//! scenario error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ehrling_lab::{scenario, LabError, Scenario};

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn example(name: &str) -> PathBuf {
    manifest().join("scenarios").join(name)
}

fn ehrling(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehrling"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_into(scenario: &Path, dir: &Path) -> Output {
    ehrling(&["run", scenario.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()])
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Compares every file in `dir` against `tests/golden`; set `EHRLING_BLESS=1`
/// to rewrite the golden copies.
fn check_golden(dir: &Path) {
    let golden = manifest().join("tests/golden");
    let bless = std::env::var_os("EHRLING_BLESS").is_some();
    for (name, bytes) in files(dir) {
        let path = golden.join(&name);
        if bless {
            std::fs::write(&path, &bytes).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
        assert!(
            want == bytes,
            "{name} differs from its golden copy:\n{}",
            String::from_utf8_lossy(&bytes)
        );
    }
}

#[test]
fn examples_match_golden_files_and_exit_statuses() {
    for (file, code) in [("norm.json", 0), ("certify.json", 0), ("falsify.json", 2)] {
        let dir = tempfile::tempdir().unwrap();
        let out = run_into(&example(file), dir.path());
        assert_eq!(
            out.status.code(),
            Some(code),
            "{file}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        check_golden(dir.path());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for file in ["certify.json", "falsify.json", "classify.json"] {
        run_into(&example(file), a.path());
        run_into(&example(file), b.path());
    }
    let fa = files(a.path());
    assert!(!fa.is_empty());
    assert_eq!(fa, files(b.path()));
}

#[test]
fn example_results_have_the_expected_content() {
    let dir = tempfile::tempdir().unwrap();
    for file in ["norm.json", "certify.json", "falsify.json"] {
        run_into(&example(file), dir.path());
    }
    let report = |stem: &str| -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(dir.path().join(format!("{stem}.report.json"))).unwrap()).unwrap()
    };

    let vw = &report("norm-e3")["result"]["very_weak"];
    let (lo, hi) = (vw["lo"].as_f64().unwrap(), vw["hi"].as_f64().unwrap());
    assert!(lo <= 0.125 && 0.125 <= hi);

    let csv = std::fs::read_to_string(dir.path().join("certify-diagonal.certificate.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[col("residual")].parse::<f64>().unwrap() <= 0.0);
        assert_eq!(&r[col("verdict")], "pass");
    }

    let r = report("falsify-shift");
    assert_eq!(r["exit_code"], 2);
    let w = &r["result"]["rows"][0]["result"];
    assert_eq!(w["outcome"], "witness");
    assert!(w["basis_index"].as_u64().unwrap() >= 15);
    assert!(w["residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn job_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = ehrling(&[
        "run",
        example("falsify.json").to_str().unwrap(),
        "--job",
        "certify",
        "--output-dir",
        dir.path().to_str().unwrap(),
        "--no-tables",
    ]);
    // The shift has no modulus: the certify job reports it as falsified.
    assert_eq!(out.status.code(), Some(2));
    let written = files(dir.path());
    assert_eq!(written.len(), 1);
    let r: serde_json::Value = serde_json::from_slice(&written[0].1).unwrap();
    assert_eq!(r["scenario"]["job"], "certify");
    assert_eq!(r["diagnostics"]["job_override"], "certify");
    assert_eq!(r["result"]["error"]["kind"], "no-modulus");
    assert_eq!(r["result"]["error"]["module"], "ehrling");
}

#[test]
fn usage_and_configuration_errors_exit_with_one() {
    assert_eq!(ehrling(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ehrling(&["run"]).status.code(), Some(1));
    assert_eq!(ehrling(&["--help"]).status.code(), Some(0));
    assert_eq!(ehrling(&["run", "/nonexistent/scenario.json"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema": "ehrling-scenario/v1", "job": "certify", "operator": {"diagonal": {"lambda": [1, "x"]}}}"#,
    )
    .unwrap();
    let out = ehrling(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/operator/diagonal/lambda/1"));

    // Parses, but fails a semantic check.
    std::fs::write(
        &bad,
        r#"{"schema": "ehrling-scenario/v1", "job": "certify", "dim": 0, "operator": {"shift": {}}}"#,
    )
    .unwrap();
    let out = run_into(&bad, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"/dim\""));
    assert!(!dir.path().join("certify.report.json").exists());
}

fn pointer_of(text: &str) -> String {
    match Scenario::from_json(text) {
        Err(LabError::Schema { pointer, .. }) => pointer,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn schema_errors_carry_json_pointers() {
    let head = r#""schema": "ehrling-scenario/v1""#;
    assert_eq!(pointer_of(&format!(r#"{{{head}, "job": "fly"}}"#)), "/job");
    assert_eq!(pointer_of(r#"{"schema": "v0", "job": "norm"}"#), "/schema");
    assert_eq!(
        pointer_of(&format!(r#"{{{head}, "job": "norm", "params": {{"u": [1, null]}}}}"#)),
        "/params/u/1"
    );
    assert_eq!(
        pointer_of(&format!(r#"{{{head}, "job": "norm", "space": {{"lp": {{"q": 2}}}}}}"#)),
        "/space/lp/q"
    );
    assert_eq!(
        pointer_of(&format!(r#"{{{head}, "job": "norm", "sampler": {{"smaples": 3}}}}"#)),
        "/sampler/smaples"
    );

    // Semantic checks after parsing.
    let sc = Scenario::from_json(&format!(
        r#"{{{head}, "job": "certify", "dim": 4, "operator": {{"diagonal": {{"lambda": [1, 2], "codomain": {{"lp": {{"p": 0.5}}}}}}}}}}"#
    ))
    .unwrap();
    match ehrling_lab::run(&sc, Path::new(".")) {
        Err(LabError::Schema { pointer, .. }) => assert_eq!(pointer, "/operator/diagonal/codomain/lp/p"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn shipped_schema_is_current() {
    let shipped = std::fs::read_to_string(manifest().join("schema/scenario.v1.json")).unwrap();
    assert_eq!(shipped, scenario::json_schema(), "regenerate with `ehrling schema`");
    let out = ehrling(&["schema"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), shipped);
}

#[test]
fn every_shipped_scenario_validates() {
    for entry in std::fs::read_dir(manifest().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = ehrling(&["validate", path.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", path.display());
        }
    }
}

#[test]
fn missing_dimension_and_family_mode_take_defaults() {
    let sc = Scenario::from_json(
        r#"{"schema": "ehrling-scenario/v1", "job": "falsify", "operator": {"shift": {}}, "params": {"eps": [0.5]}}"#,
    )
    .unwrap();
    assert_eq!(sc.family.mode, scenario::ModeConfig::DenseRational);
    let out = ehrling_lab::run(&sc, Path::new(".")).unwrap();
    assert_eq!(out.exit_code(), 2);
    let w = &out.report.result["rows"][0]["result"];
    assert_eq!(w["u"].as_array().unwrap().len(), ehrling_lab::build::DEFAULT_DIM);
}
