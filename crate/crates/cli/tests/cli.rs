use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use posgain::data;
use posgain::io::{write_document, LftFile, PolySystemFile};
use posgain::lft::lft_from_polynomial;
use posgain::lp::LinearProgram;

fn posgain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posgain")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn structured(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("structured report")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SISO: &str = r#"{"n": 2, "p": 1, "q": 1,
  "A": [[-3.0, 1.0], [0.5, -2.0]], "C": [[1.0, 2.0]], "E": [[1.0], [0.5]], "F": [[0.25]]}"#;

const UNSTABLE: &str = r#"{"n": 2, "p": 1, "q": 1,
  "A": [[-1.0, 2.0], [2.0, -1.0]], "C": [[1.0, 0.0]], "E": [[1.0], [0.0]], "F": [[0.0]]}"#;

const NOT_POSITIVE: &str = r#"{"n": 1, "p": 1, "q": 1, "A": [[-1.0]], "C": [[-1.0]], "E": [[1.0]], "F": [[0.0]]}"#;

const WITH_INPUT: &str = r#"{"n": 2, "m": 1, "p": 1, "q": 1,
  "A": [[1.0, 0.5], [0.2, -2.0]], "B": [[1.0], [0.0]], "C": [[1.0, 1.0]], "D": [[0.0]],
  "E": [[1.0], [1.0]], "F": [[0.0]]}"#;

/// Affine in one parameter on `[0, 1]`.
const AFFINE: &str = r#"{"num_params": 1, "n": 2, "p": 1, "q": 1, "terms": [
  {"exponents": [0], "A": [[-3.0, 1.0], [1.0, -4.0]], "C": [[1.0, 1.0]], "E": [[1.0], [0.0]], "F": [[0.0]]},
  {"exponents": [1], "A": [[1.0, 0.0], [0.0, 0.5]]}]}"#;

#[test]
fn table3_reproduces_five_rows() {
    let out = posgain(&["reproduce", "table3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("reproduce table3: reproduced"));
    for level in ["0.0", "0.1", "0.3", "0.5", "0.7"] {
        assert!(text.contains(&format!("   {level} ")), "{text}");
    }
}

#[test]
fn ex72_prints_the_coefficient_map() {
    let out = posgain(&["reproduce", "ex72"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("x^2        0     0    -1     1     1"), "{text}");
    assert!(text.contains("x          1    -1     0     2    -2"));
    assert!(text.contains("1          1     1     1     1     1"));
}

#[test]
fn siso_l1_and_linf_gains_coincide() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "siso.json", SISO);
    let l1 = structured(&posgain(&["gain", s(&f), "--norm", "l1", "--format", "structured"]));
    let linf = structured(&posgain(&["gain", s(&f), "--norm", "linf", "--format", "structured"]));
    assert_eq!(l1["oracle"], linf["oracle"]);
    // The two LPs carry slightly different epsilon offsets.
    let (g1, ginf) = (l1["gamma"].as_f64().unwrap(), linf["gamma"].as_f64().unwrap());
    assert!((g1 - ginf).abs() <= 1e-6 * g1, "{g1} {ginf}");
    // H(0) = F - C A^{-1} E = 1/4 + 6.5/5.5
    assert!((g1 - (0.25 + 6.5 / 5.5)).abs() < 1e-5, "{g1}");
}

#[test]
fn structured_report_carries_the_stable_fields() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "siso.json", SISO);
    let r = structured(&posgain(&["gain", s(&f), "--norm", "l1", "--format", "structured", "--epsilon", "1e-8"]));
    for key in ["gamma", "epsilon", "lambda_floor", "status", "witness_lambda", "grid_verdict"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["epsilon"].as_f64(), Some(1e-8));
    assert_eq!(r["status"], "optimal");
    assert_eq!(r["grid_verdict"], "not applicable");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&posgain(&["gain", "--bogus"])), 2);
    assert_eq!(code(&posgain(&["gain", "/nonexistent/system.json", "--norm", "l1"])), 2);
    assert_eq!(code(&posgain(&["robust-gain", "x.json", "--norm", "l1", "--scaling", "cubic"])), 2);
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"n": 2, "p": 1, "q": 1, "A": [[1.0]], "C": [[1.0]], "E": [[1.0]], "F": [[0.0]]}"#);
    assert_eq!(code(&posgain(&["gain", s(&bad), "--norm", "l1"])), 2);
    assert_eq!(code(&posgain(&["--help"])), 0);
}

#[test]
fn failing_verdicts_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let unstable = write(&dir, "unstable.json", UNSTABLE);
    let out = posgain(&["gain", s(&unstable), "--norm", "l1", "--format", "structured"]);
    assert_eq!(code(&out), 1);
    assert_eq!(structured(&out)["status"], "unstable");
    let out = posgain(&["check", s(&unstable)]);
    assert_eq!(code(&out), 1);

    let np = write(&dir, "np.json", NOT_POSITIVE);
    let out = posgain(&["check", s(&np), "--format", "structured"]);
    assert_eq!(code(&out), 1);
    assert_eq!(structured(&out)["status"], "not_positive");
    // A tolerance larger than the violation accepts it.
    assert_eq!(code(&posgain(&["check", s(&np), "--tol", "2"])), 0);
}

#[test]
fn synthesis_respects_a_zero_pattern_and_dumps_its_lp() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "plant.json", WITH_INPUT);
    let zeros = write(&dir, "zeros.json", r#"{"zero_pattern": [[0, 1]]}"#);
    let lp_path = dir.path().join("synth.lp");
    let out = posgain(&["synth", s(&sys), "--zeros", s(&zeros), "--dump-lp", s(&lp_path), "--format", "structured"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let r = structured(&out);
    assert_eq!(r["details"]["K"][0][1].as_f64(), Some(0.0));
    assert!(r["details"]["K"][0][0].as_f64().unwrap() < -1.0);
    let lp = LinearProgram::<f64>::parse_dump(&std::fs::read_to_string(lp_path).unwrap()).unwrap();
    assert!(lp.num_vars >= 4);

    let out = posgain(&["synth", s(&sys), "--norm", "l1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn robust_gain_reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "quad.json", &write_document(&PolySystemFile::from_poly_system(&data::quadratic_system())).unwrap());
    let args = ["robust-gain", s(&doc), "--norm", "l1", "--degree", "2", "--grid", "21", "--format", "structured"];
    let a = posgain(&args);
    let b = posgain(&args);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let r = structured(&a);
    assert!((r["gamma"].as_f64().unwrap() - 94.167).abs() < 0.5);
    assert_eq!(r["grid_verdict"], "not refuted");
    assert!(r["conservatism"].is_string());
}

#[test]
fn lft_documents_support_l1_only() {
    let dir = TempDir::new().unwrap();
    let lft = lft_from_polynomial(&data::quadratic_system(), 2).unwrap();
    let doc = write(&dir, "quad_lft.json", &write_document(&LftFile::from_lft(&lft)).unwrap());
    let out = posgain(&["robust-gain", s(&doc), "--norm", "l1", "--scaling", "const", "--degree", "2", "--grid", "11"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("133.94"));
    assert_eq!(code(&posgain(&["robust-gain", s(&doc), "--norm", "linf"])), 2);
}

#[test]
fn vertex_and_relaxed_bounds_cover_the_grid() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "affine.json", AFFINE);
    let vert = structured(&posgain(&["robust-gain", s(&doc), "--norm", "l1", "--vertices", "--format", "structured"]));
    let relaxed = structured(&posgain(&["robust-gain", s(&doc), "--norm", "l1", "--format", "structured"]));
    assert_eq!(vert["grid_verdict"], "not refuted");
    assert_eq!(relaxed["grid_verdict"], "not refuted");
    let worst = vert["grid"]["worst_gain"].as_f64().unwrap();
    assert!(vert["gamma"].as_f64().unwrap() >= worst - 1e-9);
    assert!(relaxed["gamma"].as_f64().unwrap() >= worst - 1e-9);
}

#[test]
fn robust_synthesis_is_certified_on_the_grid() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "toy.json", &write_document(&PolySystemFile::from_poly_system(&data::toy_robust_synthesis())).unwrap());
    let out = posgain(&["robust-synth", s(&doc), "--scaling", "const", "--format", "structured"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let r = structured(&out);
    assert_eq!(r["grid_verdict"], "not refuted");
    assert_eq!(r["grid"]["points"], 101);
}

#[test]
fn delay_reproduction_agrees_everywhere() {
    let out = posgain(&["reproduce", "delay", "--count", "12", "--seed", "3", "--format", "structured"]);
    assert_eq!(code(&out), 0);
    let r = structured(&out);
    assert_eq!(r["details"]["agreeing"], 12);
}

#[test]
fn table2_follows_epsilon() {
    let out = posgain(&["reproduce", "table2", "--count", "20", "--epsilon", "1e-10", "--format", "structured"]);
    assert_eq!(code(&out), 0);
    assert_eq!(structured(&out)["status"], "reproduced");
}
