//! End-to-end behaviour of the `anonmet` binary: exit codes, error messages
//! and the shape of its output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn anonmet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anonmet"))
        .args(args)
        .env_remove("ANONMET_JSON")
        .env_remove("ANONMET_STRICT")
        .env_remove("ANONMET_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = anonmet(&full);
    assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("anonmet-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.0.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn real_state_file(dims: &[usize], rows: &[Vec<f64>]) -> String {
    let matrix: Vec<Vec<[f64; 2]>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| [x, 0.0]).collect())
        .collect();
    serde_json::json!({ "format": "anonmet-state", "version": 1, "dims": dims, "matrix": matrix }).to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn empty_state_file_is_an_input_error() {
    let dir = TempDir::new("empty");
    let path = dir.file("empty.json", "");
    let out = anonmet(&["classify", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = TempDir::new("malformed");
    let path = dir.file("bad.json", "{\n  \"format\": \"anonmet-state\",\n  \"dims\": [2, 2,\n}");
    let out = anonmet(&["classify", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 4") && err.contains("column"), "{err}");
}

#[test]
fn non_psd_matrix_is_an_invariant_violation() {
    let dir = TempDir::new("nonpsd");
    let rows = vec![
        vec![-0.25, 0.0, 0.0, 0.0],
        vec![0.0, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 0.5, 0.0],
        vec![0.0, 0.0, 0.0, 0.25],
    ];
    let path = dir.file("neg.json", &real_state_file(&[2, 2], &rows));
    let out = anonmet(&["classify", p(&path)]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("min eigenvalue -2.500e-1"), "{err}");
    assert!(err.contains("trace residual") && err.contains("hermiticity residual"), "{err}");
}

#[test]
fn theta_outside_the_period_is_rejected() {
    for theta in ["7", "-0.5", "6.2832"] {
        let out = anonmet(&["simulate", "--catalog", "bell-psi-plus", "--theta", theta]);
        assert_eq!(out.status.code(), Some(2), "theta {theta}");
        assert!(stderr(&out).contains("theta"), "{}", stderr(&out));
    }
}

#[test]
fn unknown_catalog_name_is_an_input_error() {
    let out = anonmet(&["classify", "--catalog", "no-such-state"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strict_mode_exits_4_on_inconclusive_results() {
    // Bell-diagonal: both marginals are maximally mixed, so the witness
    // search cannot settle weak anonymity.
    let rows = vec![
        vec![0.35, 0.0, 0.0, 0.05],
        vec![0.0, 0.15, 0.05, 0.0],
        vec![0.0, 0.05, 0.15, 0.0],
        vec![0.05, 0.0, 0.0, 0.35],
    ];
    let dir = TempDir::new("strict");
    let path = dir.file("bell-diagonal.json", &real_state_file(&[2, 2], &rows));
    let relaxed = anonmet(&["classify", p(&path)]);
    assert_eq!(relaxed.status.code(), Some(0));
    assert!(stdout(&relaxed).contains("inconclusive"));
    let strict = anonmet(&["--strict", "classify", p(&path)]);
    assert_eq!(strict.status.code(), Some(4), "{}", stderr(&strict));
    // a conclusive state stays at 0 under --strict
    let bell = anonmet(&["--strict", "classify", "--catalog", "bell-psi-plus"]);
    assert_eq!(bell.status.code(), Some(0));
}

#[test]
fn missing_witness_is_an_input_error() {
    let out = anonmet(&["simulate", "--catalog", "product", "--theta", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--h-a"), "{}", stderr(&out));
    // an explicit pair is accepted instead
    let explicit = anonmet(&[
        "simulate", "--catalog", "product", "--theta", "1", "--h-a", "pauli:z", "--g-b", "pauli:z",
    ]);
    assert_eq!(explicit.status.code(), Some(0), "{}", stderr(&explicit));
}

#[test]
fn exported_states_load_back_identically() {
    let dir = TempDir::new("export");
    let path = dir.path("werner.json");
    let out = anonmet(&["export", "--catalog", "werner", "--param", "a=0.3", "-o", p(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let from_file = json(&["classify", p(&path)]);
    let from_catalog = json(&["classify", "--catalog", "werner", "--param", "a=0.3"]);
    for key in ["wa", "sa", "ppt", "classical", "aligned_discord", "entangled"] {
        assert_eq!(from_file[key], from_catalog[key], "{key}");
    }
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file["format"], "anonmet-state");
    assert_eq!(file["dims"], serde_json::json!([2, 2]));
    assert_eq!(file["matrix"][0][0][0].as_f64(), Some(0.175));
}

#[test]
fn werner_classification_and_steering_note() {
    let low = json(&["classify", "--catalog", "werner", "--param", "a=0.2"]);
    assert_eq!(low["aligned_discord"], true);
    assert_eq!(low["aligned_entanglement"], false);
    assert_eq!(low["entangled"], false);
    assert!(!low["notes"].to_string().contains("steerable"));
    let high = json(&["classify", "--catalog", "werner", "--param", "a=0.8"]);
    assert_eq!(high["entangled"], true);
    assert_eq!(high["aligned_entanglement"], false);
    assert!(high["notes"].to_string().contains("steerable"));
}

#[test]
fn bell_modes_have_frequencies_minus_one_zero_one() {
    let report = json(&["modes", "--catalog", "bell-psi-plus", "--h", "proj:1"]);
    let omegas: Vec<f64> = report["modes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["omega"].as_f64().unwrap())
        .collect();
    assert_eq!(omegas, vec![-1.0, 0.0, 1.0]);
    assert!(report["completeness_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn diagonal_states_only_have_the_zero_mode() {
    for state in ["maximally-mixed", "cc-example"] {
        let report = json(&["modes", "--catalog", state, "--h", "diag:0,1"]);
        let modes = report["modes"].as_array().unwrap();
        assert_eq!(modes.len(), 1, "{state}");
        assert_eq!(modes[0]["omega"].as_f64(), Some(0.0));
    }
}

#[test]
fn perfect_anonymity_serializes_as_plus_inf() {
    let report = json(&["merit", "--catalog", "bell-psi-plus"]);
    assert_eq!(report["n_delta"], "+inf");
    assert_eq!(report["merit"], "+inf");
    let text = stdout(&anonmet(&["merit", "--catalog", "bell-psi-plus"]));
    assert!(text.contains("+inf"));
}

#[test]
fn pinned_merit_values() {
    let report = json(&["merit", "--catalog", "perturbed-bell", "--h-a", "proj:1", "--g-b", "proj:1"]);
    let close = |key: &str, want: f64| {
        let got = report[key].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs(), "{key}: {got} vs {want}");
    };
    close("qfi_a", 0.9366666666666668);
    close("qfi_b", 0.9341666666666668);
    close("min_fidelity", 0.9746794344808969);
    close("n_delta", 0.7958544095807569);
    close("merit", 36.47325358356088);
}

#[test]
fn optimizer_direction_is_reported() {
    let args = ["merit", "--catalog", "perturbed-bell", "--optimize", "--restarts", "2", "--steps", "10"];
    let max = json(&[&args[..], &["--direction", "max"]].concat());
    let min = json(&[&args[..], &["--direction", "min"]].concat());
    assert_eq!(max["direction"], "max");
    assert_eq!(min["direction"], "min");
    assert!(max["value"].as_f64().unwrap() > 0.0);
    assert_eq!(min["value"].as_f64(), Some(0.0));
}

#[test]
fn robustness_at_zero_epsilon_is_a_coin_flip() {
    let report = json(&["robustness", "--epsilon", "0"]);
    assert_eq!(report["wa_guess_bound"].as_f64(), Some(0.5));
    assert_eq!(report["sa_guess_bound"].as_f64(), Some(0.5));
    for row in report["multicopy"].as_array().unwrap() {
        assert_eq!(row["wa_guess_bound"].as_f64(), Some(0.5));
    }
    let quarter = json(&["robustness", "--epsilon", "0.25"]);
    let sa = quarter["sa_guess_bound"].as_f64().unwrap();
    assert!((sa - (0.5 + 0.1875f64.sqrt())).abs() < 1e-12);
    let out = anonmet(&["robustness", "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn purification_attack_separates_werner_from_bell() {
    let werner = json(&["attack", "--catalog", "werner"]);
    assert_eq!(werner["sa_safe"], false);
    assert!(werner["max_leak"].as_f64().unwrap() > 1e-6);
    let bell = json(&["attack", "--catalog", "bell-psi-plus"]);
    assert_eq!(bell["sa_safe"], true);
    assert!(bell["max_leak"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn delocalised_measurement_keeps_coherence_only_for_sa_states() {
    let bell = json(&["delocalise", "--catalog", "bell-psi-plus"]);
    assert_eq!(bell["factorized"], true);
    let werner = json(&["delocalise", "--catalog", "werner"]);
    assert_eq!(werner["factorized"], false);
    let out = anonmet(&["delocalise", "--catalog", "bell-psi-plus", "--a", "1", "--b", "1"]);
    assert_eq!(out.status.code(), Some(2), "unnormalized path amplitudes");
}

#[test]
fn simulate_transcript_is_consistent() {
    let t = json(&["--seed", "5", "simulate", "--catalog", "bell-psi-plus", "--theta", "1", "--copies", "300"]);
    assert_eq!(t["schema"], "protocol_transcript");
    let counts: u64 = t["outcome_counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 300);
    assert_eq!(t["helstrom_optimal_prob"].as_f64(), Some(0.5));
    let est = t["theta_estimate"].as_f64().unwrap();
    let se = t["estimate_stderr"].as_f64().unwrap();
    assert!((est - 1.0).abs() <= 4.0 * se, "{est} +/- {se}");
}

#[test]
fn tolerance_overrides_are_validated() {
    let ok = anonmet(&["--tol", "holds=1e-8", "classify", "--catalog", "bell-psi-plus"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let bad = anonmet(&["--tol", "nonsense=1", "classify", "--catalog", "bell-psi-plus"]);
    assert_eq!(bad.status.code(), Some(2));
}
