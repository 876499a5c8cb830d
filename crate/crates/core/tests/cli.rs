use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = "n = 65\np = 3.0\nq = 4.0\nalpha = 1.0\nbeta = 1.0\ns = 2.0\nf = \"const 2\"\neps_min = 1e-3\nseed = 3\n";

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pqfrac"));
    cmd.args(args).arg(&cfg).env_remove("PQFRAC_OUT_DIR");
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_with_zero_data_gives_zero() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let cfg = BASE.replace("const 2", "const 0");
    let o = run(d.path(), &["solve", "--out", out.to_str().unwrap(), "--config"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("u_eps00.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('x'));
    for l in lines {
        let u: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(u, 0.0);
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("u_eps00.json")).unwrap()).unwrap();
    for key in ["eps", "residual_norm", "iters", "energy"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
    assert!(out.join("solve_summary.json").exists());
}

#[test]
fn hypothesis_violation_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("q = 4.0", "q = 2.5");
    let o = run(d.path(), &["verify", "--config"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(H3)"), "{}", stderr(&o));
}

#[test]
fn inapplicable_theorem_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{}checks = [\"T3b\"]\n", BASE.replace("q = 4.0", "q = 4.5"));
    let o = run(d.path(), &["verify", "--out", d.path().to_str().unwrap(), "--config"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("T3b"), "{}", stderr(&o));
    assert!(!d.path().join("report.json").exists());
}

#[test]
fn beta_dependent_check_needs_beta() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{}checks = [\"prope2\"]\n", BASE.replace("beta = 1.0", "beta = 0.0"));
    let o = run(d.path(), &["verify", "--config"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("requires beta > 0"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve", "--config"], &format!("{BASE}colour = 1\n"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn passing_verify_writes_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BASE}checks = [\"leme2\", \"prope1\", \"lemp4\"]\nlemp4_samples = 5000\n");
    let o = run(d.path(), &["verify", "--out", d.path().to_str().unwrap(), "--config"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["all_passed"], serde_json::json!(true));
    assert!(rep["constants_sha256"].as_str().unwrap().len() == 64);
    assert!(!rep["checks"].as_array().unwrap().is_empty());
}

#[test]
fn failing_check_exits_four() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BASE}checks = [\"T1\"]\neps_min = 1e-4\nrefine = false\n").replace("eps_min = 1e-3\n", "");
    let o = run(d.path(), &["verify", "--out", d.path().to_str().unwrap(), "--config"], &cfg);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("failed checks: T1"));
    assert!(d.path().join("report.json").exists());
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let env_out = d.path().join("from_env");
    let cfg_path = d.path().join("run.toml");
    fs::write(&cfg_path, format!("{BASE}out = \"{}\"\n", d.path().join("from_cfg").display())).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pqfrac"))
        .args(["solve", "--config"])
        .arg(&cfg_path)
        .env("PQFRAC_OUT_DIR", &env_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_out.join("solve_summary.json").exists());
    assert!(!d.path().join("from_cfg").exists());
}

#[test]
fn newton_budget_exhaustion_keeps_partial_output() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{}max_newton_iters = 1\n", BASE.replace("const 2", "const 200"));
    let o = run(d.path(), &["solve", "--out", d.path().to_str().unwrap(), "--config"], &cfg);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("solve_summary.json")).unwrap()).unwrap();
    assert!(summary["error"].is_string());
}

#[test]
fn empty_sweep_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["sweep", "--config"], BASE);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_with_eoc() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{}sweep_n = [65, 129]\n", BASE.replace("beta = 1.0", "beta = 0.0").replace("q = 4.0", "q = 3.0"));
    let o = run(d.path(), &["sweep", "--jobs", "1", "--out", d.path().to_str().unwrap(), "--config"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 21);
    assert_eq!(&header[..3], ["n", "eps_min", "f_scale"]);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let eoc = header.iter().position(|h| *h == "eoc").unwrap();
    assert!(rows[1][eoc].parse::<f64>().unwrap() > 1.0);
}

#[test]
fn calibrate_reproduces_pinned_constants() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("constants.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_pqfrac")).args(["calibrate", "--out"]).arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fresh = fs::read_to_string(path).unwrap();
    let pinned = include_str!("../constants.toml");
    assert_eq!(fresh, pinned);
}
