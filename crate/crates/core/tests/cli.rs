use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjhomog"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const QUADRATIC: &str = r#"{"hamiltonian": {"pieces": [{"form": "quadratic", "coeffs": {}}]}}"#;

const B_FAMILY: &str = r#"{
  "hamiltonian": {
    "pieces": [
      {"form": "quadratic", "coeffs": {"slope_medium": 1.0}, "medium_ref": "b"},
      {"form": "quadratic", "coeffs": {"slope_medium": -1.0}, "medium_ref": "b"}
    ],
    "pins": [0.0],
    "pinned_values": [0.0]
  },
  "media": {"b": {"kind": "constant", "params": {"mean": 1.0}}},
  "sigma": {"kind": "constant", "params": {"mean": 1.0}}
}"#;

const LADDER: &str = r#"{"eps_ladder": [0.25, 0.125, 0.0625], "dx_ratio": 0.0625}"#;

#[test]
fn constant_solve_writes_minus_h_at_origin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"problem": {QUADRATIC}, "datum": {{"kind": "linear", "theta": 1.5}}, "solve": {{"dx": 0.0625, "snapshots": 2}}}}"#
    );
    write(tmp.path(), "solve.json", &cfg);
    let o = run(tmp.path(), &["solve", "solve.json", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/solution.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("1,0,")).expect("u(1, 0) row");
    let u: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((u + 1.125).abs() < 1e-12, "{u}");
    assert!(tmp.path().join("out/manifest.json").exists());
}

#[test]
fn malformed_json_is_a_config_error_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "bad.json", "{\n  \"problem\": ,\n}");
    let o = run(tmp.path(), &["solve", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 2 column"), "{e}");
    write(tmp.path(), "typo.json", &format!("{{\"problem\": {QUADRATIC},\n \"solv\": {{}}}}"));
    let o = run(tmp.path(), &["solve", "typo.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `solv`"), "{}", stderr(&o));
}

#[test]
fn small_domain_is_a_solver_error_naming_the_margin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"problem": {QUADRATIC}, "datum": {{"kind": "linear", "theta": 2.0}}, "solve": {{"dx": 0.0625, "half_width": 1.0}}}}"#
    );
    write(tmp.path(), "tight.json", &cfg);
    let o = run(tmp.path(), &["solve", "tight.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("margin"), "{}", stderr(&o));
}

#[test]
fn effective_quadratic_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"problem": {QUADRATIC}, "thetas": [-2, -1, 0, 1, 2], "effective": {LADDER}}}"#);
    write(tmp.path(), "eff.json", &cfg);
    let o = run(tmp.path(), &["effective", "eff.json", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/effective.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,h_eff,err,alpha_env,beta_env,seed_count"));
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[1] - 0.5 * f[0] * f[0]).abs() < 1e-9, "{line}");
    }
}

#[test]
fn split_and_compose_emits_all_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"problem": {B_FAMILY}, "thetas": [-1, -0.5, 0, 0.5, 1], "effective": {LADDER}, "split_pin": 0}}"#
    );
    write(tmp.path(), "eff.json", &cfg);
    let o = run(tmp.path(), &["effective", "eff.json", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["effective.csv", "effective_minus.csv", "effective_plus.csv", "effective_composed.csv"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f}");
    }
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/min_formula.json")).unwrap()).unwrap();
    assert!(v["max_discrepancy"].as_f64().unwrap() < 1e-8);
    // the pinned family dips below zero away from the pin
    let csv = std::fs::read_to_string(tmp.path().join("out/effective.csv")).unwrap();
    let h: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(h[2].abs() < 1e-9 && h[1] < -0.3 && h[3] < -0.3, "{h:?}");
}

#[test]
fn manifest_replay_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"problem": {B_FAMILY}, "thetas": [0.5, 1], "effective": {LADDER}}}"#);
    write(tmp.path(), "eff.json", &cfg);
    let o = run(tmp.path(), &["effective", "eff.json", "--out-dir", "a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(tmp.path(), &["replay", "a/manifest.json", "--out-dir", "b", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["effective.csv", "estimates.json", "manifest.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    // a manifest is also a valid config for its own command
    let o = run(tmp.path(), &["effective", "a/manifest.json", "--out-dir", "c"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(tmp.path(), &["solve", "a/manifest.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "m.json",
        r#"{"medium": {"kind": "random-phase", "params": {"mean": 1.2, "amplitudes": [0.3], "frequencies": [1.0]}}, "points": 11}"#,
    );
    let o = run(tmp.path(), &["media-sample", "m.json", "--seed", "7", "--out-dir", "s7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(tmp.path(), &["media-sample", "m.json", "--seed", "8", "--out-dir", "s8"]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("s7/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 7);
    let a = std::fs::read(tmp.path().join("s7/medium.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("s8/medium.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn default_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "suite.json", r#"{"random_data": 4}"#);
    let o = run(tmp.path(), &["verify", "suite.json", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let jsonl = std::fs::read_to_string(tmp.path().join("out/reports.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 11);
}

#[test]
fn broken_flux_fails_contraction() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "suite.json",
        r#"{"broken_flux": true, "checks": ["contraction"], "random_data": 2}"#,
    );
    let o = run(tmp.path(), &["verify", "suite.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("contraction"), "{}", stderr(&o));
}

#[test]
fn strict_turns_inconclusive_into_failure() {
    let tmp = tempfile::tempdir().unwrap();
    // a flat triple: no witness either way within the error bars
    write(
        tmp.path(),
        "suite.json",
        r#"{"checks": ["non-convexity-witness"], "thetas": [-2, 0, 2],
            "effective": {"eps_ladder": [0.25, 0.125, 0.0625], "dx_ratio": 0.0625}}"#,
    );
    let o = run(tmp.path(), &["verify", "suite.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("inconclusive"));
    let o = run(tmp.path(), &["verify", "suite.json", "--strict"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("inconclusive checks (strict): non-convexity-witness"), "{}", stderr(&o));
}

#[test]
fn unknown_check_name_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "suite.json", r#"{"checks": ["contractoin"]}"#);
    let o = run(tmp.path(), &["verify", "suite.json"]);
    assert_eq!(o.status.code(), Some(2));
}
