use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cps-sentinel"));
    cmd.args(args).current_dir(dir).env_remove("CPS_SENTINEL_SEED");
    if let Some(v) = seed_env {
        cmd.env("CPS_SENTINEL_SEED", v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_preset(dir: &Path, name: &str) {
    assert_eq!(code(&run(dir, &["preset", name, "--out", &format!("{name}.json")], None)), 0);
}

fn summary(dir: &Path, args: &[&str], seed_env: Option<&str>) -> serde_json::Value {
    let out = run(dir, args, seed_env);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn check_reports_influence() {
    let tmp = tempfile::tempdir().unwrap();
    write_preset(tmp.path(), "example1");
    let v = summary(tmp.path(), &["check", "example1.json"], None);
    assert_eq!(v["influence_holds"], false);
    assert_eq!(v["unreachable"], serde_json::json!([1]));
}

#[test]
fn validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_preset(dir, "identity");
    write_preset(dir, "example1");
    std::fs::write(dir.join("garbage.json"), "{ not json").unwrap();
    let text = std::fs::read_to_string(dir.join("identity.json")).unwrap();
    let mut bad: serde_json::Value = serde_json::from_str(&text).unwrap();
    bad["model"]["process_noise"] = serde_json::json!([[1.0, 2.0], [2.0, 1.0]]);
    std::fs::write(dir.join("bad.json"), bad.to_string()).unwrap();

    let bad_out = run(dir, &["check", "bad.json"], None);
    assert_eq!(code(&bad_out), 1);
    assert!(String::from_utf8_lossy(&bad_out.stderr).contains("model.process_noise"));
    for args in [
        vec!["check", "garbage.json"],
        vec!["check", "missing.json"],
        vec!["montecarlo", "example1.json", "--seeds", "2", "--horizon", "5"],
        vec!["simulate", "identity.json", "--horizon", "0"],
        vec!["preset", "nope"],
        vec!["frobnicate"],
        vec!["detect", "identity.json", "--bogus"],
    ] {
        assert_eq!(code(&run(dir, &args, None)), 1, "{args:?}");
    }
    assert_eq!(code(&run(dir, &["simulate", "identity.json", "--horizon", "5"], Some("abc"))), 1);
}

#[test]
fn override_lets_refused_scenario_run() {
    let tmp = tempfile::tempdir().unwrap();
    write_preset(tmp.path(), "example1");
    let v = summary(
        tmp.path(),
        &["montecarlo", "example1.json", "--seeds", "3", "--horizon", "20", "--override-assumption2", "--out", "o"],
        None,
    );
    assert_eq!(v["n_runs"], 3);
}

#[test]
fn numeric_blowup_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_preset(dir, "identity");
    let text = std::fs::read_to_string(dir.join("identity.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["model"]["dynamics"] = serde_json::json!([[1e150, 0.0], [0.0, 1e150]]);
    std::fs::write(dir.join("blow.json"), v.to_string()).unwrap();
    assert_eq!(code(&run(dir, &["simulate", "blow.json", "--horizon", "10", "--out", "o"], None)), 2);
    assert_eq!(code(&run(dir, &["detect", "blow.json", "--horizon", "10", "--out", "o"], None)), 2);
    assert_eq!(
        code(&run(dir, &["montecarlo", "blow.json", "--seeds", "2", "--horizon", "10", "--out", "o"], None)),
        2
    );
}

#[test]
fn detect_writes_series_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_preset(dir, "replacement");
    let v = summary(
        dir,
        &["detect", "replacement.json", "--seed", "5", "--horizon", "50", "--threshold", "-3", "--out", "o"],
        None,
    );
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["n", "logL", "r_n", "decision", "threshold", "drift_estimate"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert_eq!(v["n"], 50);
    assert_eq!(v["threshold"], -3.0);
    let csv = std::fs::read_to_string(dir.join("o/detection_seed5.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,logL,r_n,s_sum,sbreve_sum,logdet_ratio_sum");
    assert_eq!(lines.count(), 50);

    assert_eq!(code(&run(dir, &["simulate", "replacement.json", "--seed", "5", "--horizon", "50", "--out", "o"], None)), 0);
    let traj = std::fs::read_to_string(dir.join("o/trajectory_seed5.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,x_1,x_2,u_1,u_2,e_1,e_2");
}

#[test]
fn seed_env_overrides_base() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_preset(dir, "replacement");
    let args = |out: &'static str| ["montecarlo", "replacement.json", "--seeds", "4", "--horizon", "30", "--out", out];
    let base = summary(dir, &args("a"), None);
    let same = summary(dir, &args("b"), Some("1"));
    let other = summary(dir, &args("c"), Some("777"));
    assert_eq!(base["mean_drift"], same["mean_drift"]);
    assert_ne!(base["mean_drift"], other["mean_drift"]);
}

#[test]
fn montecarlo_summary_has_exact_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_preset(dir, "fdi");
    let v = summary(dir, &["montecarlo", "fdi.json", "--seeds", "3", "--horizon", "20", "--out", "o"], None);
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "detection_fraction",
            "drift_stderr",
            "horizon",
            "mean_drift",
            "n_runs",
            "runtime_seconds",
            "scenario",
            "threshold"
        ]
    );
    assert!(dir.join("o/summary.json").exists());
    assert!(dir.join("o/runs/run_00000.csv").exists());
}
