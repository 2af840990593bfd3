use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use morse_nf::linalg::Mat;
use morse_nf::report::SystemJson;
use morse_nf::symplectic::CartanType;
use morse_nf::systems::{matches_up_to_block_order, model_system, semiclassical_model_system};
use morse_nf::Rational;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morse-nf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report on stdout")
}

fn term(x: &[u32], xi: &[u32], h: u32, c: Value) -> Value {
    json!({"x": x, "xi": xi, "h": h, "coeff": c})
}

#[test]
fn classify_focus_focus() {
    let dir = TempDir::new().unwrap();
    let sys = json!({"n": 2, "deg_cut": 2, "symbols": [
        [term(&[1, 0], &[0, 1], 0, json!(1)), term(&[0, 1], &[1, 0], 0, json!(-1))],
        [term(&[1, 0], &[1, 0], 0, json!(1)), term(&[0, 1], &[0, 1], 0, json!(1))],
    ]});
    let p = write(&dir, "ff.json", &sys);
    let o = run(&["classify", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert_eq!(r["cartan_type"]["m_f"], 1);
    assert_eq!(r["cartan_type"]["m_e"], 0);
    assert!(r["frame_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn nilpotent_is_rejected_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "xi2.json",
        &json!({"n": 1, "deg_cut": 2, "symbols": [[term(&[0], &[2], 0, json!(1))]]}),
    );
    let o = run(&["classify", s(&p)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not semisimple"));
}

#[test]
fn malformed_input_exits_1() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\"n\": 1,").unwrap();
    assert_eq!(run(&["classify", s(&p)]).status.code(), Some(1));
    assert_eq!(
        run(&["classical", s(&p), "--deg", "4"]).status.code(),
        Some(1)
    );
}

#[test]
fn linear_terms_are_a_precondition_failure() {
    let dir = TempDir::new().unwrap();
    let sys = json!({"n": 1, "deg_cut": 3, "symbols": [[term(&[1], &[1], 0, json!(1)), term(&[1], &[0], 0, json!(2))]]});
    let p = write(&dir, "lin.json", &sys);
    assert_eq!(
        run(&["classical", s(&p), "--deg", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn hyperbolic_subprincipal_gives_minus_c() {
    let dir = TempDir::new().unwrap();
    let sys = json!({"n": 1, "deg_cut": 4, "h_cut": 1, "symbols": [[
        term(&[1], &[1], 0, json!(1)),
        term(&[0], &[0], 1, json!("5/3")),
    ]]});
    let p = write(&dir, "hyp.json", &sys);
    let o = run(&["semiclassical", s(&p), "--deg", "4", "--h-order", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert_eq!(r["alpha"], json!([["-5/3"]]));
    assert_eq!(r["certificate"]["ok"], true);
}

#[test]
fn already_normal_system_has_no_generators() {
    let dir = TempDir::new().unwrap();
    let sys = json!({"n": 1, "deg_cut": 6, "symbols": [[
        term(&[2], &[0], 0, json!(1)),
        term(&[0], &[2], 0, json!(1)),
        term(&[4], &[0], 0, json!(3)),
        term(&[2], &[2], 0, json!(6)),
        term(&[0], &[4], 0, json!(3)),
    ]]});
    let p = write(&dir, "osc.json", &sys);
    let o = run(&["classical", s(&p), "--deg", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["generators"], json!([]));
}

#[test]
fn seeded_fixture_round_trips_and_tampering_is_caught() {
    let dir = TempDir::new().unwrap();
    let ty = CartanType::new(1, 1, 0);
    let fx = model_system::<Rational>(&ty, 5, 5);
    let p = write(
        &dir,
        "sys.json",
        &serde_json::to_value(SystemJson::from_system(&fx.system)).unwrap(),
    );
    let rp = dir.path().join("report.json");
    let o = run(&["classical", s(&p), "--deg", "5", "--out", s(&rp)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(run(&["verify", s(&p), s(&rp)]).status.code(), Some(0));

    let report: Value = serde_json::from_str(&fs::read_to_string(&rp).unwrap()).unwrap();
    let m0: Vec<Vec<Rational>> = (0..2)
        .map(|i| {
            (0..2)
                .map(|j| {
                    let terms = report["m"][i][j].as_array().unwrap();
                    let c = terms
                        .iter()
                        .find(|t| t["q"] == json!([0, 0]) && t["h"] == 0);
                    c.map_or(Rational::from(0), |t| {
                        morse_nf::Scalar::from_json(&t["coeff"]).unwrap()
                    })
                })
                .collect()
        })
        .collect();
    assert!(matches_up_to_block_order(
        &Mat::from_rows(m0),
        &fx.planted_c,
        &ty,
        0.0
    ));

    let mut bad = report.clone();
    assert_ne!(bad["generators"][0][0]["coeff"], json!("12345/7"));
    bad["generators"][0][0]["coeff"] = json!("12345/7");
    let bp = write(&dir, "bad_gen.json", &bad);
    assert_eq!(run(&["verify", s(&p), s(&bp)]).status.code(), Some(3));
}

#[test]
fn semiclassical_report_verifies_and_tampered_alpha_fails() {
    let dir = TempDir::new().unwrap();
    let fx = semiclassical_model_system::<Rational>(&CartanType::new(0, 1, 0), 7, 4, 1);
    let p = write(
        &dir,
        "sys.json",
        &serde_json::to_value(SystemJson::from_system(&fx.system)).unwrap(),
    );
    let rp = dir.path().join("report.json");
    let o = run(&[
        "semiclassical",
        s(&p),
        "--deg",
        "4",
        "--h-order",
        "1",
        "--out",
        s(&rp),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(run(&["verify", s(&p), s(&rp)]).status.code(), Some(0));
    let mut bad: Value = serde_json::from_str(&fs::read_to_string(&rp).unwrap()).unwrap();
    bad["alpha"][0][0] = json!("101/7");
    let bp = write(&dir, "bad_alpha.json", &bad);
    let o = run(&["verify", s(&p), s(&bp)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hbar^1"));
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let fx = semiclassical_model_system::<Rational>(&CartanType::new(1, 0, 0), 2, 4, 1);
    let p = write(
        &dir,
        "sys.json",
        &serde_json::to_value(SystemJson::from_system(&fx.system)).unwrap(),
    );
    let a = run(&[
        "semiclassical",
        s(&p),
        "--deg",
        "4",
        "--h-order",
        "1",
        "--seed",
        "3",
    ]);
    let b = run(&[
        "semiclassical",
        s(&p),
        "--deg",
        "4",
        "--h-order",
        "1",
        "--seed",
        "3",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn float_mode_runs_the_same_pipeline() {
    let dir = TempDir::new().unwrap();
    let fx = model_system::<Rational>(&CartanType::new(0, 2, 0), 4, 5);
    let p = write(
        &dir,
        "sys.json",
        &serde_json::to_value(SystemJson::from_system(&fx.system)).unwrap(),
    );
    let o = run(&["--mode", "float", "classical", s(&p), "--deg", "5"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout_json(&o)["header"]["mode"], "float");
}

#[test]
fn neumann_types_at_the_three_fixed_points() {
    let expected = [(2, 0), (1, 1), (0, 2)];
    for (i, (m_e, m_h)) in expected.into_iter().enumerate() {
        let o = run(&[
            "neumann",
            "--eigenvalues",
            "1,2,4",
            "--fixed-point",
            &i.to_string(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let r = stdout_json(&o);
        assert_eq!(
            (
                r["cartan_type"]["m_e"].as_u64(),
                r["cartan_type"]["m_h"].as_u64()
            ),
            (Some(m_e), Some(m_h))
        );
    }
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "spec.json",
        &json!({"eigenvalues": [3.0, 1.0, 2.0], "fixed_point": 2}),
    );
    let r = stdout_json(&run(&["neumann", s(&p)]));
    assert_eq!(r["matches"], true);
    assert_eq!(r["cartan_type"]["m_h"], 2);
}

#[test]
fn help_documents_exit_codes() {
    let o = run(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Exit codes"));
    assert!(text.contains("3  verification failed"));
}
