use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn weakcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakcorr")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = weakcorr(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn ghz_run_reports_three_halves_and_the_null_rows() {
    let ghz = fixture("ghz.json");
    let cfg = fixture("analytic_idealized.json");
    let r = ok_json(&["run", "--state", ghz.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert!((f(&r["correlation"]) - 1.5).abs() < 1e-10);
    let skipped: Vec<u64> = r["skipped_k"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(skipped, vec![2, 3, 5, 8]);
    assert_eq!(r["postselections"].as_array().unwrap().len(), 8);
    assert!(r["postselections"][1].get("weak_values").is_none());
    assert!((f(&r["oracle_diag"]) - 1.5).abs() < 1e-12);
    assert!(f(&r["diagnostics"]["max_completeness_residual"]) < 1e-10);
}

#[test]
fn product_run_is_uncorrelated_with_nothing_skipped() {
    let product = fixture("product.json");
    let r = ok_json(&["run", "--state", product.to_str().unwrap()]);
    assert!(f(&r["correlation"]).abs() < 1e-10);
    assert!(r["skipped_k"].as_array().unwrap().is_empty());
    let r = ok_json(&["run", "--state", product.to_str().unwrap(), "--backend", "circuit", "--mode", "literal", "--g", "1e-4"]);
    assert!(f(&r["correlation"]).abs() <= 1e-8);
}

#[test]
fn reports_are_byte_stable_and_use_fixed_precision() {
    let cfg = fixture("circuit_enumerate.json");
    let args = ["run", "--seed", "11", "--config", cfg.to_str().unwrap()];
    let (a, b) = (weakcorr(&args), weakcorr(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("\"correlation\": "));
    let first = text.lines().find(|l| l.contains("\"correlation\"")).unwrap();
    let number = first.trim().trim_start_matches("\"correlation\": ").trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 12, "{number}");
}

#[test]
fn enumerated_branches_cover_every_reading() {
    let cfg = fixture("circuit_enumerate.json");
    let r = ok_json(&["run", "--seed", "5", "--config", cfg.to_str().unwrap()]);
    let branches = r["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 8);
    // the conveyance readings exhaust their probability; the three broadcast
    // meters must agree, which happens with probability 2·(½)³
    let total: f64 = branches.iter().map(|b| f(&b["probability"])).sum();
    assert!((total - 0.25).abs() < 1e-10, "{total}");
}

#[test]
fn tables_match_the_golden_transcription() {
    let out = weakcorr(&["tables", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), std::fs::read_to_string(fixture("tables_n3.txt")).unwrap());
}

#[test]
fn small_tables() {
    let one = stdout(&weakcorr(&["tables", "1", "--format", "csv"]));
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "i,1,2");
    assert_eq!(lines[1].trim_start_matches("A1i"), lines[2].trim_start_matches("A2i"));
    let two = stdout(&weakcorr(&["tables", "2"]));
    assert!(two.contains("i,1,2,3,4\n"));
    assert!(two.contains("A3i,"));
    assert!(!two.contains("A4i"));
    assert!(two.contains("reconstruction,OK"));
    assert_eq!(weakcorr(&["tables", "0"]).status.code(), Some(2));
}

#[test]
fn oracle_reports() {
    let ghz = fixture("ghz.json");
    let r = ok_json(&["oracle", "--state", ghz.to_str().unwrap()]);
    assert!(f(&r["max_residual"]) <= 1e-10);
    assert_eq!(r["elements"].as_array().unwrap().len(), 64);
    let mixed = fixture("maximally_mixed.json");
    let r = ok_json(&["oracle", "--state", mixed.to_str().unwrap()]);
    assert_eq!(f(&r["oracle_diag"]), 0.0);
    assert!(f(&r["trace_distance_to_product"]).abs() < 1e-12);
    let r = ok_json(&["oracle", "--seed", "7"]);
    assert!(f(&r["max_residual"]) <= 1e-10);
}

#[test]
fn sweep_emits_rows_and_rejects_bad_lists() {
    let ghz = fixture("ghz.json");
    let g = ghz.to_str().unwrap();
    let out = weakcorr(&["sweep", "--state", g, "--g", "1e-2,5e-3,2.5e-3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("g,correlation,abs_error,max_weak_value_residual,error_ratio,monotone\n"));
    assert_eq!(text.lines().count(), 4);
    let product = fixture("product.json");
    let rows = ok_json(&["sweep", "--state", product.to_str().unwrap(), "--g", "1e-4", "--mode", "literal"]);
    assert!(f(&rows[0]["correlation"]) <= 1e-8);
    for bad in ["", ",", "1e-3,1e-2", "1e-2,1e-2", "-1e-3", "abc"] {
        assert_eq!(weakcorr(&["sweep", "--state", g, "--g", bad]).status.code(), Some(2), "g list {bad:?}");
    }
    assert_eq!(weakcorr(&["sweep", "--state", g]).status.code(), Some(2));
}

#[test]
fn parse_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write_temp(&dir, "broken.json", "{\n  \"dims\": [2],\n  \"entries\": [[1, 0], \n}");
    let out = weakcorr(&["run", "--state", &broken]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("column"), "{err}");

    let unknown = write_temp(&dir, "cfg.json", r#"{"backend": "analytic", "temperature": 3}"#);
    assert_eq!(weakcorr(&["run", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(weakcorr(&["run", "--backend", "quantum"]).status.code(), Some(2));
    assert_eq!(weakcorr(&["run", "--state", "/nonexistent/state.json"]).status.code(), Some(2));
    assert_eq!(weakcorr(&["frobnicate"]).status.code(), Some(2));
    let garbage = write_temp(&dir, "garbage.json", "\u{0}\u{1}not json at all");
    assert_eq!(weakcorr(&["oracle", "--state", &garbage]).status.code(), Some(2));
}

#[test]
fn invariant_violations_exit_three_and_name_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"dims":[2],"entries":[[1,0],[0,0],[0,0],[1,0]]}"#, "unit-trace"),
        (r#"{"dims":[2],"entries":[[0.5,0],[1,0],[0,0],[0.5,0]]}"#, "hermiticity"),
        (r#"{"dims":[2],"entries":[[1.5,0],[0,0],[0,0],[-0.5,0]]}"#, "positive-semidefinite"),
        (r#"{"dims":[2],"terms":[{"p":0.6,"amplitudes":[[1,0],[0,0]]}]}"#, "sum"),
        (r#"{"dims":[2],"terms":[{"p":1.0,"amplitudes":[[1,0],[1,0]]}]}"#, "invariant-violation"),
        (r#"{"dims":[2,2],"entries":[[1,0]]}"#, "invariant-violation"),
        (r#"{"dims":[65536,65536],"entries":[]}"#, "dimension"),
    ];
    for (i, (body, needle)) in cases.iter().enumerate() {
        let path = write_temp(&dir, &format!("s{i}.json"), body);
        let out = weakcorr(&["run", "--state", &path]);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(3), "case {i}: {err}");
        assert!(err.contains(needle), "case {i}: {err}");
    }
    let zero_g = write_temp(&dir, "g.json", r#"{"g": 0}"#);
    assert_eq!(weakcorr(&["run", "--config", &zero_g]).status.code(), Some(3));
    assert_eq!(weakcorr(&["run", "--sigma=-1"]).status.code(), Some(3));
}

#[test]
fn outputs_can_go_to_files_in_csv() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.csv");
    let ghz = fixture("ghz.json");
    let out = weakcorr(&["run", "--state", ghz.to_str().unwrap(), "--format", "csv", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(target).unwrap();
    assert!(csv.starts_with("k,label,probability,deviation,skipped\n"));
    assert!(csv.contains("\n2,++-,0.00000000000e0,0.00000000000e0,true\n"), "{csv}");
    assert!(csv.ends_with("correlation,,,1.50000000000e0,\n"));
}

#[test]
fn custom_postselection_basis_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // single qubit pair of parties with the y-basis on each
    let y = |s: f64| vec![[h, 0.0], [0.0, s * h]];
    let mut vectors = Vec::new();
    for (a, la) in [(1.0, "+"), (-1.0, "-")] {
        for (b, lb) in [(1.0, "+"), (-1.0, "-")] {
            let (fa, fb) = (y(a), y(b));
            let amps: Vec<[f64; 2]> = fa
                .iter()
                .flat_map(|x| fb.iter().map(move |z| [x[0] * z[0] - x[1] * z[1], x[0] * z[1] + x[1] * z[0]]))
                .collect();
            vectors.push(serde_json::json!({"label": format!("{la}{lb}i"), "amplitudes": amps, "factors": [fa, fb]}));
        }
    }
    write_temp(&dir, "basis.json", &serde_json::json!({"dims": [2, 2], "vectors": vectors}).to_string());
    let cfg = write_temp(&dir, "cfg.json", r#"{"postselection_basis": {"file": "basis.json"}}"#);
    let bell = write_temp(
        &dir,
        "bell.json",
        &serde_json::json!({"dims": [2, 2], "terms": [{"p": 1.0, "amplitudes": [[h, 0], [0, 0], [0, 0], [h, 0]]}]}).to_string(),
    );
    let r = ok_json(&["run", "--state", &bell, "--config", &cfg, "--dims", "2,2"]);
    assert_eq!(r["postselections"][0]["label"], "++i");
    // Bell populations: oracle Σ_i |ρ_ii − products| = 2·¼ + 2·¼
    assert!((f(&r["oracle_diag"]) - 1.0).abs() < 1e-12);
    assert!(f(&r["correlation"]) > 0.0);
}
