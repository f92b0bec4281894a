//! End-to-end tests driving the compiled binary: output envelopes, schema
//! conformance, artifacts, determinism, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheeger"))
        .args(args)
        .current_dir(dir)
        .env("CHEEGER_THREADS", "2")
        .output()
        .expect("binary launches")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        !out.stdout.is_empty(),
        "no stdout; stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON envelope")
}

fn write_path3(dir: &Path) -> PathBuf {
    let path = dir.join("path3.json");
    fs::write(
        &path,
        r#"{"vertices": [{"id": 1, "m": 1.0, "b": 1.0},
                         {"id": 2, "m": 1.0, "b": 0.0},
                         {"id": 3, "m": 1.0, "b": 1.0}],
            "edges": [{"u": 1, "v": 2, "w": 1.0}, {"u": 2, "v": 3, "w": 1.0}]}"#,
    )
    .unwrap();
    path
}

fn write_square_grid(dir: &Path) -> PathBuf {
    let path = dir.join("grid4.json");
    fs::write(
        &path,
        r#"{"grid": {"w": 4, "h": 4, "mesh": 0.25, "mask": "1111111111111111"}}"#,
    )
    .unwrap();
    path
}

#[test]
fn solve_h_reports_the_path_constant() {
    let dir = tempfile::tempdir().unwrap();
    write_path3(dir.path());
    let out = run_in(dir.path(), &["solve-h", "path3.json"]);
    assert_eq!(out.status.code(), Some(0));
    let result = &stdout_json(&out)["result"];
    assert!((result["h"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(result["set"], serde_json::json!([1, 2, 3]));
    // Enumeration agrees.
    let out = run_in(dir.path(), &["solve-h", "path3.json", "--exact-enum"]);
    assert!((stdout_json(&out)["result"]["h"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn oracle_finds_the_optimal_pair() {
    let dir = tempfile::tempdir().unwrap();
    write_path3(dir.path());
    let out = run_in(
        dir.path(),
        &["oracle", "path3.json", "--n", "2", "--phi", "pnorm:inf", "--objective", "h"],
    );
    assert_eq!(out.status.code(), Some(0));
    let result = &stdout_json(&out)["result"];
    assert_eq!(result["value"].as_f64().unwrap(), 2.0);
    let mut ratios: Vec<f64> = result["chamber_stats"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["ratio"].as_f64().unwrap())
        .collect();
    ratios.sort_by(f64::total_cmp);
    assert_eq!(ratios, vec![1.0, 2.0]);
    assert_eq!(result["one_adjusted"], serde_json::json!(true));
}

#[test]
fn eigen_solves_whole_domain_and_single_chambers() {
    let dir = tempfile::tempdir().unwrap();
    write_path3(dir.path());
    let out = run_in(dir.path(), &["eigen", "path3.json", "--p", "2", "--with-u"]);
    assert_eq!(out.status.code(), Some(0));
    let result = &stdout_json(&out)["result"];
    let lambda = result["lambda"].as_f64().unwrap();
    assert!((lambda - (2.0 - 2f64.sqrt())).abs() < 1e-7);
    assert_eq!(result["u"].as_array().unwrap().len(), 3);

    // Restricting to an endpoint chamber: boundary 1 plus the absorbed edge
    // on unit volume gives lambda = 2.
    fs::write(dir.path().join("labels.json"), r#"{"n": 2, "assignment": [1, 0, 2]}"#).unwrap();
    let out = run_in(
        dir.path(),
        &["eigen", "path3.json", "--p", "2", "--chamber-file", "labels.json", "--chamber", "2"],
    );
    assert_eq!(out.status.code(), Some(0));
    let lambda = stdout_json(&out)["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - 2.0).abs() < 1e-9);
}

#[test]
fn cluster_results_are_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    write_square_grid(dir.path());
    let args = [
        "solve-cluster", "grid4.json", "--n", "2", "--phi", "pnorm:inf",
        "--restarts", "8", "--seed", "11",
    ];
    let a = stdout_json(&run_in(dir.path(), &args));
    let b = stdout_json(&run_in(dir.path(), &args));
    assert_eq!(
        serde_json::to_string(&a["result"]).unwrap(),
        serde_json::to_string(&b["result"]).unwrap()
    );
    assert_eq!(a["meta"]["config"], b["meta"]["config"]);
    assert_eq!(a["meta"]["seed"], serde_json::json!(11));
    // The balanced split of the unit square: both chamber ratios are 6.
    assert_eq!(a["result"]["value"].as_f64().unwrap(), 6.0);
}

#[test]
fn chamber_maps_render_as_pgm() {
    let dir = tempfile::tempdir().unwrap();
    write_square_grid(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "solve-cluster", "grid4.json", "--n", "2", "--phi", "pnorm:inf", "--seed", "3",
            "--out", "map.pgm", "--format", "pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let pgm = fs::read_to_string(dir.path().join("map.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n4 4\n255\n"));
    assert!(pgm.contains("128"), "chamber 1 gray level present:\n{pgm}");
    assert!(pgm.contains("255\n"), "chamber 2 gray level present:\n{pgm}");
}

#[test]
fn sweep_phi_emits_the_contract_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_path3(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "sweep-phi", "path3.json", "--n", "2", "--q-list", "1,2,inf",
            "--out", "phi.csv", "--format", "csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("phi.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "key,value,gap,distance,runtime_ms");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("inf,"));
    let result = &stdout_json(&out)["result"];
    assert_eq!(result["sandwich_ok"], serde_json::json!([true, true, true]));
    assert_eq!(result["rows"][2]["gap"].as_f64().unwrap(), 0.0);
}

#[test]
fn verify_judges_reports_and_flags_corruption() {
    let dir = tempfile::tempdir().unwrap();
    write_square_grid(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "solve-cluster", "grid4.json", "--n", "2", "--phi", "pnorm:inf",
            "--out", "report.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));

    let out = run_in(dir.path(), &["verify", "report.json", "grid4.json"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = &stdout_json(&out)["result"];
    assert_eq!(summary["passed"], serde_json::json!(true));
    assert_eq!(summary["value_consistent"], serde_json::json!(true));

    // Halving the reported value makes it inconsistent and breaks the
    // perimeter-derived lower bound.
    let mut envelope: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    envelope["result"]["value"] = serde_json::json!(1.0);
    fs::write(dir.path().join("bad.json"), envelope["result"].to_string()).unwrap();
    let out = run_in(dir.path(), &["verify", "bad.json", "grid4.json"]);
    assert_eq!(out.status.code(), Some(1));
    let summary = &stdout_json(&out)["result"];
    assert_eq!(summary["passed"], serde_json::json!(false));
    assert_eq!(summary["value_consistent"], serde_json::json!(false));
}

#[test]
fn envelopes_validate_against_the_shipped_schema() {
    let schema: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/output.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();

    let dir = tempfile::tempdir().unwrap();
    write_path3(dir.path());
    write_square_grid(dir.path());
    let runs: Vec<Vec<&str>> = vec![
        vec!["solve-h", "path3.json"],
        vec!["oracle", "path3.json", "--n", "2", "--phi", "pnorm:inf"],
        vec!["eigen", "path3.json", "--p", "1.5", "--with-u"],
        vec!["solve-cluster", "grid4.json", "--n", "2", "--phi", "pnorm:2", "--seed", "1"],
        vec![
            "solve-cluster", "grid4.json", "--n", "2", "--phi", "pnorm:inf",
            "--objective", "lp", "--p", "2", "--restarts", "2",
        ],
        vec!["sweep-phi", "path3.json", "--n", "2", "--q-list", "1,2,inf"],
        vec!["sweep-p", "path3.json", "--n", "2", "--phi", "pnorm:inf", "--p-list", "2,1.5"],
    ];
    for args in &runs {
        let out = run_in(dir.path(), args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let envelope = stdout_json(&out);
        let errors: Vec<String> = validator
            .iter_errors(&envelope)
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        assert!(errors.is_empty(), "{args:?} violates schema: {errors:?}");
    }

    // The verify envelope too.
    let out = run_in(
        dir.path(),
        &["oracle", "path3.json", "--n", "2", "--phi", "pnorm:inf", "--out", "report.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(dir.path(), &["verify", "report.json", "path3.json"]);
    let envelope = stdout_json(&out);
    assert!(validator.is_valid(&envelope), "verify envelope violates schema");
}

#[test]
fn failures_use_the_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_path3(dir.path());
    // Missing instance.
    let out = run_in(dir.path(), &["solve-cluster", "missing.json", "--n", "2", "--phi", "pnorm:inf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // Unknown phi string.
    let out = run_in(dir.path(), &["solve-cluster", "path3.json", "--n", "2", "--phi", "norm:9"]);
    assert_eq!(out.status.code(), Some(2));
    // Spectral objective without an exponent.
    let out = run_in(
        dir.path(),
        &["solve-cluster", "path3.json", "--n", "2", "--phi", "pnorm:inf", "--objective", "lp"],
    );
    assert_eq!(out.status.code(), Some(2));
    // Unknown flag (argument parser).
    let out = run_in(dir.path(), &["solve-h", "path3.json", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // Enumeration cap: 3^25 assignments is over budget.
    fs::write(
        dir.path().join("big.json"),
        format!(
            r#"{{"grid": {{"w": 5, "h": 5, "mesh": 1.0, "mask": "{}"}}}}"#,
            "1".repeat(25)
        ),
    )
    .unwrap();
    let out = run_in(dir.path(), &["oracle", "big.json", "--n", "2", "--phi", "pnorm:inf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}
