use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const OU: &str = r#"{"triplet": {"a": 0, "sigma2": 0, "nu": {"kind": "none"}},
 "coefficients": {"b": "-x", "sigma": "1", "eta": "0"}, "epsilon": 0.1}"#;
const BM: &str = r#"{"triplet": {"a": 0, "sigma2": 0, "nu": {"kind": "none"}},
 "coefficients": {"b": "0", "sigma": "1", "eta": "0"}, "epsilon": 0.1, "n": 8}"#;
const JUMPS: &str = r#"{"triplet": {"a": 0, "sigma2": 0, "nu": {"kind": "atoms", "params": {"atoms": [{"size": 1, "mass": 1}]}}},
 "coefficients": {"b": "-x", "sigma": "0.5", "eta": "1"}, "epsilon": 0.2, "n": 16}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-action"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().to_path_buf();
    fs::write(p.join("ou.json"), OU).unwrap();
    fs::write(p.join("bm.json"), BM).unwrap();
    fs::write(p.join("jumps.json"), JUMPS).unwrap();
    fs::write(p.join("line.json"), r#"{"n": 4, "values": [0, 0.5, 1, 1.5, 2], "start": 0}"#).unwrap();
    (d, p)
}

#[test]
fn brownian_action_of_slope_two_line() {
    let (_d, p) = setup();
    let o = run(&p, &["action", "--functional", "brownian", "--path", "line.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "2.0");
}

#[test]
fn ou_minimize_matches_closed_form() {
    let (_d, p) = setup();
    let o = run(&p, &["minimize", "--model", "ou.json", "--x1", "1.0", "--n", "2000", "--out", "res.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("res.json")).unwrap()).unwrap();
    let e2 = 2f64.exp();
    assert!((v["action"].as_f64().unwrap() - (e2 - 1.0) / (e2 - 2.0 + 1.0 / e2)).abs() < 1e-3);
    assert_eq!(v["path"]["n"], 2000);
}

#[test]
fn rate_table_has_constant_action_column() {
    let (_d, p) = setup();
    let o = run(&p, &["rate-table", "--model", "bm.json", "--event", "terminal>=1", "--eps", "0.5,0.25,0.1", "--samples", "20000", "--out", "t.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(p.join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "epsilon,p_hat,ci_lo,ci_hi,rate_value,neg_inf_S");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let s: f64 = r.split(',').nth(5).unwrap().parse().unwrap();
        assert!((s + 0.5).abs() < 1e-9);
    }
}

#[test]
fn simulated_path_round_trips_into_action() {
    let (_d, p) = setup();
    let o = run(&p, &["simulate", "--model", "jumps.json", "--seed", "3", "--out", "path.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&p, &["action", "--functional", "general", "--model", "jumps.json", "--path", "path.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!(v.is_finite() && v >= 0.0);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let (_d, p) = setup();
    for (out, threads) in [("a.csv", "1"), ("b.csv", "4")] {
        let o = bin()
            .current_dir(&p)
            .env("LEVY_ACTION_THREADS", threads)
            .args(["rate-table", "--model", "jumps.json", "--event", "sup>=1", "--eps", "0.5,0.2", "--samples", "500", "--seed", "11", "--out", out])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(p.join("a.csv")).unwrap(), fs::read(p.join("b.csv")).unwrap());
    let a = run(&p, &["simulate", "--model", "jumps.json", "--samples", "3", "--seed", "2", "--format", "csv"]);
    let b = run(&p, &["simulate", "--model", "jumps.json", "--samples", "3", "--seed", "2", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validation_errors_exit_one_and_write_nothing() {
    let (_d, p) = setup();
    fs::write(p.join("bad.json"), OU.replace("\"-x\"", "\"x+*2\"")).unwrap();
    for args in [
        vec!["minimize", "--model", "bad.json", "--x1", "1", "--out", "o.json"],
        vec!["minimize", "--model", "missing.json", "--x1", "1", "--out", "o.json"],
        vec!["action", "--functional", "levy", "--path", "line.json", "--out", "o.json"],
        vec!["rate-table", "--model", "bm.json", "--event", "terminal>1", "--eps", "0.5", "--out", "o.json"],
        vec!["bogus"],
    ] {
        let o = run(&p, &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!p.join("o.json").exists());
    }
    let o = run(&p, &["minimize", "--model", "bad.json", "--x1", "1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset 2"));
}

#[test]
fn numerical_failure_exits_two() {
    let (_d, p) = setup();
    fs::write(p.join("blowup.json"), OU.replace("\"-x\"", "\"x^3 + 100\"").replace("\"epsilon\": 0.1", "\"epsilon\": 0.1, \"state_interval\": [-1, 1]")).unwrap();
    let o = run(&p, &["simulate", "--model", "blowup.json", "--start", "50", "--out", "o.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!p.join("o.json").exists());
}

#[test]
fn symbol_and_legendre_tables() {
    let (_d, p) = setup();
    let o = run(&p, &["symbol", "--model", "jumps.json", "--xi-min", "-1", "--xi-max", "1", "--points", "3"]);
    let s = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = s.lines().nth(3).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[3] - (1f64.exp() - 2.0)).abs() < 1e-14);
    let o = run(&p, &["legendre", "--model", "jumps.json", "--p-min", "-1", "--p-max", "1", "--points", "3"]);
    let s = String::from_utf8(o.stdout).unwrap();
    let last: Vec<&str> = s.lines().nth(3).unwrap().split(',').collect();
    assert!((last[1].parse::<f64>().unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-10);
    assert_eq!(last[3], "interior");
}

#[test]
fn equivalence_tables() {
    let (_d, p) = setup();
    let o = run(&p, &["equivalence", "--model", "jumps.json", "--m", "1,4,16", "--n", "16", "--samples", "300", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8(o.stdout).unwrap();
    let last = s.lines().last().unwrap();
    assert!(last.starts_with("16,16,"));
    assert_eq!(last.split(',').nth(4).unwrap(), "0");
    let o = run(&p, &["equivalence", "--model", "jumps.json", "--variant", "levy", "--eps", "0.5,0.1", "--n", "4", "--samples", "200", "--delta", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}
