use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qcd_core::config::ExperimentConfig;
use qcd_core::grid::PolicyGrid;
use qcd_core::io::{parse_limited_table, parse_stochastic_table};
use qcd_core::limited::v0_row;
use qcd_core::model::{kl_divergence, make_gaussian_pair};

fn qcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn print_config_lists_every_default() {
    let o = qcd(&["--print-config", "--seed", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["pi0", "snr_db", "capacity", "pmf", "grid_size", "quad_tol", "vi_tol", "max_iters", "trials"] {
        assert!(text.contains(key), "missing {key}");
    }
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(cfg.run.master_seed, 9);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"energy": {"pmf": [0.5, 0.2]}}"#);
    let o = qcd(&["solve-limited", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pmf"));

    let unknown = write(dir.path(), "unknown.json", r#"{"model": {"rho": 0.1, "sigma": 1}}"#);
    let o = qcd(&["chain", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"));

    let o = qcd(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zero_rights_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"solver": {"rights": 0, "grid_size": 101}}"#);
    let out = dir.path().join("t.json");
    let o = qcd(&["solve-limited", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = parse_limited_table(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 1);
}

#[test]
fn unreachable_tolerance_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"solver": {"grid_size": 101, "max_iters": 2}}"#);
    let o = qcd(&["solve-stochastic", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn stochastic_reductions() {
    let dir = tempfile::tempdir().unwrap();
    let every = write(
        dir.path(),
        "every.json",
        r#"{"energy": {"capacity": 4, "pmf": [0, 1]}, "solver": {"grid_size": 201}}"#,
    );
    let o = qcd(&["solve-stochastic", "--config", &every]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("iterations"));
    let t = parse_stochastic_table(&stdout(&o)).unwrap();
    for n in 1..t.v.len() {
        for (a, b) in t.v[n].iter().zip(&t.v[0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    let none = write(
        dir.path(),
        "none.json",
        r#"{"energy": {"capacity": 0, "pmf": [1]}, "solver": {"grid_size": 401}}"#,
    );
    let o = qcd(&["solve-stochastic", "--config", &none]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = parse_stochastic_table(&stdout(&o)).unwrap();
    let g = PolicyGrid::new(401).unwrap();
    let v0 = v0_row(&g, 0.1, 0.01).unwrap();
    for (a, b) in t.v[0].iter().zip(&v0.values) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn simulate_is_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"run": {"policy": "shiryaev", "alphas": [0.1, 0.01], "trials": 500}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let o = qcd(&["simulate", "--config", &cfg, "--seed", "4", "--threads", threads, "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("policy,param,trials,pfa,pfa_se,add,add_se,risk,risk_se,mean_samples")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "shiryaev");
    assert_eq!(first[2], "500");
    assert!(text.contains("lower-bound,0.01,"));
}

#[test]
fn greedy_curve_carries_bound_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"snr_db": 5}, "run": {"policy": "greedy", "alphas": [0.1], "trials": 300}}"#,
    );
    let o = qcd(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("greedy,0.1,300,")));
    let bound = text.lines().find(|l| l.starts_with("greedy-bound,")).unwrap();
    let add: f64 = bound.split(',').nth(5).unwrap().parse().unwrap();
    assert!((add - 10f64.ln() / (0.227658590716 * 0.868107610632 + 0.105360515658)).abs() < 1e-6);
}

#[test]
fn optimal_policy_needs_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"run": {"policy": "stochastic-optimal"}}"#);
    let o = qcd(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn limited_table_feeds_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"rho": 0.2}, "solver": {"grid_size": 401, "rights": 1, "cost": 0.02},
            "run": {"policy": "limited", "trials": 400}}"#,
    );
    let table = dir.path().join("t.json");
    assert!(qcd(&["solve-limited", "--config", &cfg, "--out", table.to_str().unwrap()]).status.success());
    let o = qcd(&["simulate", "--config", &cfg, "--table", table.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("limited,0.02,400,"));

    let other = write(dir.path(), "o.json", r#"{"run": {"policy": "limited", "trials": 400}}"#);
    let o = qcd(&["simulate", "--config", &other, "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"run": {"alphas": [1e-5], "interval": 11}}"#);
    let out = dir.path().join("b.csv");
    let o = qcd(&["bounds", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let kl = kl_divergence(&make_gaussian_pair(1.0, 0.0).unwrap());
    let shown: f64 = stdout(&o)
        .split_whitespace()
        .skip_while(|w| *w != "kl")
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((shown - kl).abs() < 1e-11);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("alpha,interval,lower,upper,greedy,prior_only,min_rights,min_rights_base10")
    );
    let one: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(one[1], "1");
    assert_eq!(one[2], one[3]);
    let eleven: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(eleven[1], "11");
    assert_eq!(&eleven[6..], &["10", "10"]);
}

#[test]
fn chain_report() {
    let o = qcd(&["chain"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(row, ["0.95", "0.03", "0.01", "0.01"]);
    assert!(text.contains("p~ = 1 - p0 w0 = 0.227658590716"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"energy": {"capacity": 0, "pmf": [1]}}"#);
    let out = dir.path().join("chain.json");
    let o = qcd(&["chain", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("degenerate"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["sampling_fraction"], 0.0);
}
