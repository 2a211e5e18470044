use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{sub}.json"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_extravagance"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap()
}

fn run_ok(dir: &Path, sub: &str, config: &str) -> TempDir {
    let out = TempDir::new_in(dir).unwrap();
    let o = run(dir, sub, config, &["--out", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

/// Data rows of a CSV file as columns by name.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config sha256 "));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, body)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, body) = rows(path);
    let i = header.iter().position(|h| h == name).unwrap();
    body.into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn golden_denominators_are_fibonacci() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(dir.path(), "cf", r#"{"alpha": {"kind": "golden"}, "n_max": 12}"#);
    let q = column(&out.path().join("cf.csv"), "q");
    assert_eq!(q, ["1", "2", "3", "5", "8", "13", "21", "34", "55", "89", "144", "233"]);
}

#[test]
fn luczak_coefficients_are_iterated_squares() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(dir.path(), "cf", r#"{"alpha": {"kind": "luczak", "b": "2", "c": "2", "count": 6}}"#);
    let a = column(&out.path().join("cf.csv"), "a");
    assert_eq!(a, ["4", "16", "256", "65536", "4294967296", "18446744073709551616"]);
}

#[test]
fn malformed_config_exits_with_two_and_names_the_field() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "cf", r#"{"alpha": {"kind": "golden"}, "n_mxa": 3}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_mxa"));
    let o = run(dir.path(), "cf", r#"{"alpha": {"kind": "rational", "p": "x", "q": "7"}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`p`"));
    let o = run(dir.path(), "cf", r#"{"alpha": {"kind": "rational", "p": "9", "q": "7"}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn insufficient_precision_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "simulate",
        r#"{"alpha": {"kind": "golden"}, "n_max": 100000}"#,
        &["--precision-bits", "64", "--out", dir.path().to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn classify_verdicts() {
    let dir = TempDir::new().unwrap();
    for (alpha, verdict) in [
        (r#"{"kind": "golden"}"#, "DivergesHeuristic"),
        (r#"{"kind": "luczak", "b": "2", "c": "2"}"#, "ConvergesHeuristic"),
        (r#"{"kind": "coefficients", "prefix": [], "period": ["1000", "1"]}"#, "Inconclusive"),
    ] {
        let out = run_ok(dir.path(), "classify", &format!(r#"{{"alpha": {alpha}, "n_max": 20}}"#));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.path().join("verdict.json")).unwrap()).unwrap();
        assert_eq!(json["result"]["verdict"], verdict, "{alpha}");
        assert!(!column(&out.path().join("wterms.csv"), "w").is_empty());
    }
}

#[test]
fn theta_with_zero_shift_is_one() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(
        dir.path(),
        "theta",
        r#"{"alpha": {"kind": "golden"}, "samples": 3, "n_max": 5000, "theta": {}}"#,
    );
    let theta = column(&out.path().join("theta.csv"), "theta");
    assert!(theta.len() > 10);
    assert!(theta.iter().all(|t| t == "1.0000000000000000e0"));
}

#[test]
fn golden_checks_pass_with_relaxed_constant() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(
        dir.path(),
        "checks",
        r#"{"alpha": {"kind": "golden"}, "samples": 10, "n_max": 18,
            "checks": {"kinds": ["lemma_dk_adapted", "phigamma"], "lemma_constant": 3.0}}"#,
    );
    let pass = column(&out.path().join("checks.csv"), "pass");
    assert_eq!(pass.len(), 10 * 18 * 2);
    assert!(pass.iter().all(|p| p == "true"));
}

#[test]
fn denjoy_koksma_rows_need_a_table_observable() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(
        dir.path(),
        "checks",
        r#"{"alpha": {"kind": "silver"}, "samples": 4, "n_max": 10,
            "observable": {"kind": "indicator", "a": "0", "b": "1/4"},
            "checks": {"kinds": ["denjoy_koksma"]}}"#,
    );
    assert!(column(&out.path().join("checks.csv"), "pass").iter().all(|p| p == "true"));
    let o = run(
        dir.path(),
        "checks",
        r#"{"alpha": {"kind": "silver"}, "checks": {"kinds": ["denjoy_koksma"]}}"#,
        &["--out", dir.path().to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unit_speed_flow_masses_match_ball_area() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(
        dir.path(),
        "flow",
        r#"{"alpha": {"kind": "golden"},
            "flow": {"p": [0.1, 0.2], "q": [0.6, 0.7], "epsilon": 0.05, "speed": "unit",
                     "t_min": 10, "t_max": 10000, "grid_points": 8, "starts": [[0.35, 0.45]]}}"#,
    );
    let area = std::f64::consts::PI * 0.05 * 0.05;
    let mass: Vec<f64> = column(&out.path().join("flow.csv"), "mass_p")
        .iter()
        .map(|m| m.parse().unwrap())
        .collect();
    assert!((mass.last().unwrap() / area - 1.0).abs() < 0.2);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("historic.json")).unwrap()).unwrap();
    let limsup = json["trajectories"][0]["historic"]["limsup_p"].as_f64().unwrap();
    assert!((limsup / area - 1.0).abs() < 0.2);
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"alpha": {"kind": "silver"}, "samples": 4, "seed": 9, "n_max": 20000}"#;
    let a = run_ok(dir.path(), "simulate", config);
    let b = run_ok(dir.path(), "simulate", config);
    let read = |d: &TempDir| fs::read(d.path().join("ratios.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = TempDir::new_in(dir.path()).unwrap();
    let o = run(dir.path(), "simulate", config, &["--seed", "10", "--out", c.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(read(&a), read(&c));
}

#[test]
fn help_lists_every_subcommand() {
    let o = Command::new(env!("CARGO_BIN_EXE_extravagance")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["cf", "classify", "simulate", "theta", "checks", "flow"] {
        assert!(text.contains(sub), "{sub}");
    }
}
