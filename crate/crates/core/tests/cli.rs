use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stonespec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stonespec"))
        .args(args)
        .env_remove("STONESPEC_CAP")
        .output()
        .unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn eigenvector_quasipoints_reproduce_eigenvalues() {
    let out = stonespec(&["observable", "--operator", &fixture("diag12.json"), "--quasipoints", &fixture("eigen_quasipoints.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("block,ray,value"));
    let values: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!((values[0] - 1.0).abs() < 1e-12);
    assert!((values[1] - 2.0).abs() < 1e-12);
    assert!((values[2] - 2.0).abs() < 1e-12);
}

#[test]
fn abelian_operator_gives_gelfand_values() {
    let out = stonespec(&["observable", "--operator", &fixture("gelfand3.json"), "--quasipoints", &fixture("atoms3.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json_of(&out);
    let values: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert_eq!(values, vec![2.5, -1.0, 4.0]);
}

#[test]
fn observable_output_file_is_deterministic() {
    let (a, b) = (tmp("obs_a.csv"), tmp("obs_b.csv"));
    for path in [&a, &b] {
        let out = stonespec(&[
            "observable", "--operator", &fixture("diag12.json"), "--samples", "100", "--seed", "3", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 101);
}

#[test]
fn observable_requires_hermitian_input() {
    let out = stonespec(&["observable", "--operator", &fixture("non_hermitian.json"), "--samples", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Hermitian"));
}

#[test]
fn observable_needs_quasipoints() {
    assert_eq!(stonespec(&["observable", "--operator", &fixture("diag12.json")]).status.code(), Some(2));
}

#[test]
fn ks_suite_passes_for_abelian_and_non_abelian() {
    for n in ["1", "2"] {
        let out = stonespec(&["verify", "--suite", "ks", "--n", n, "--trials", "50"]);
        assert_eq!(out.status.code(), Some(0), "n = {n}");
        assert_eq!(json_of(&out)["passed"], Value::Bool(true));
    }
}

#[test]
fn rank_suite_at_three_by_three() {
    let out = stonespec(&["verify", "--suite", "rank", "--m", "3", "--n", "3", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    let props = report["reports"][0]["properties"].as_array().unwrap();
    for p in props {
        assert_eq!(p["total"].as_u64(), Some(p["passed"].as_u64().unwrap() + p["failed"].as_u64().unwrap()));
    }
}

#[test]
fn verify_csv_summary() {
    let out = stonespec(&["verify", "--suite", "masa", "--trials", "5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("suite,property,total,passed,failed\n"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("masa,")));
}

#[test]
fn failing_properties_exit_one_with_counterexamples() {
    let out = stonespec(&["verify", "--suite", "stone", "--trials", "3", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json_of(&out);
    assert_eq!(report["passed"], Value::Bool(false));
    let failing = report["reports"][0]["properties"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["failed"].as_u64().unwrap() > 0)
        .unwrap();
    assert!(!failing["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn witness_modes() {
    let e = stonespec(&["witness", "--mode", "e-vector", "--m", "2", "--n", "3"]);
    assert_eq!(e.status.code(), Some(0));
    let report = json_of(&e);
    assert_eq!(report["certified"], Value::Bool(true));
    assert_eq!(report["atoms"].as_array().unwrap().len(), 2);
    for atom in report["atoms"].as_array().unwrap() {
        assert!(atom["members_in"].as_array().unwrap().iter().all(|b| b == false));
        assert_eq!(atom["join_in"], Value::Bool(true));
    }

    let r = stonespec(&["witness", "--mode", "random", "--seed", "7"]);
    assert_eq!(r.status.code(), Some(0));
    let w = json_of(&r);
    assert_eq!(w["join_in"], Value::Bool(true));
    assert_eq!(w["recheck"], Value::Bool(true));
    assert_eq!(w["members_in"], serde_json::json!([false, false]));

    for mode in ["e-vector", "random"] {
        assert_eq!(stonespec(&["witness", "--mode", mode, "--n", "1"]).status.code(), Some(2));
    }
}

#[test]
fn lattice_files() {
    let out = stonespec(&["lattice", &fixture("boolean3.json"), "--tables"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["ideals"].as_array().unwrap().len(), 3);
    assert_eq!(r["atoms"], serde_json::json!(["a", "b", "c"]));
    assert_eq!(r["atom_correspondence"], Value::Bool(true));
    assert_eq!(r["meet"][4][5], Value::String("a".into()));

    let chain = json_of(&stonespec(&["lattice", &fixture("chain3.json")]));
    assert_eq!(chain["ideals"], serde_json::json!([["a", "1"]]));

    assert_eq!(stonespec(&["lattice", &fixture("no_top.json")]).status.code(), Some(2));
}

#[test]
fn spectrum_samples_every_fibre() {
    let out = stonespec(&["spectrum", "--m", "3", "--n", "2", "--trials", "4", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    let fibres = r["fibres"].as_array().unwrap();
    assert_eq!(fibres.len(), 3);
    assert!(fibres.iter().all(|f| f["quasipoints"].as_array().unwrap().len() == 4));
    let csv = stonespec(&["spectrum", "--m", "3", "--n", "2", "--trials", "4", "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 13);
}

#[test]
fn shape_cap_from_environment() {
    let capped = Command::new(env!("CARGO_BIN_EXE_stonespec"))
        .args(["spectrum", "--m", "3", "--n", "3", "--trials", "1"])
        .env("STONESPEC_CAP", "8")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(3));
    let raised = Command::new(env!("CARGO_BIN_EXE_stonespec"))
        .args(["spectrum", "--m", "10", "--n", "10", "--trials", "1"])
        .env("STONESPEC_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(raised.status.code(), Some(0));
    let garbage = Command::new(env!("CARGO_BIN_EXE_stonespec"))
        .args(["spectrum"])
        .env("STONESPEC_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(garbage.status.code(), Some(2));
    assert_eq!(stonespec(&["spectrum", "--m", "9", "--n", "8"]).status.code(), Some(3));
}

#[test]
fn malformed_json_never_panics() {
    let cases = [
        "", "{", "null", "[]", "{}", "\"text\"", "[[[[", "{\"shape\":null}", "{\"elements\":[],\"leq\":[]}",
        "{\"shape\":{\"m\":1e999,\"n\":1},\"blocks\":[]}", "{\"shape\":{\"m\":1,\"n\":1},\"blocks\":[[[[1e999,0]]]]}",
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = tmp(&format!("malformed_{i}.json"));
        std::fs::write(&path, text).unwrap();
        let p = path.to_str().unwrap();
        for args in [
            vec!["observable", "--operator", p, "--samples", "1"],
            vec!["observable", "--operator", &fixture("diag12.json"), "--quasipoints", p],
            vec!["lattice", p],
        ] {
            let out = stonespec(&args);
            let expected = if *text == "[]" && args.get(3) == Some(&"--quasipoints") { 0 } else { 2 };
            assert_eq!(out.status.code(), Some(expected), "{args:?} on {text:?}");
            assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
        }
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(stonespec(&["--help"]).status.code(), Some(0));
    assert_eq!(stonespec(&["--version"]).status.code(), Some(0));
    assert_eq!(stonespec(&[]).status.code(), Some(2));
}
