use std::process::{Command, Output};

fn ellq(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ellq"));
    cmd.args(args).env_remove("ELLQ_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn ellq")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn report_goes_to_stdout_with_summary_on_stderr() {
    let out = ellq(&["verify", "--suite", "theta"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["suite"], "theta");
    assert_eq!(r["params"]["N"], 2);
    assert_eq!(r["seed"], 42);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.lines().any(|l| l.starts_with("PASS theta:")), "{err}");
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# test point\nsuite = modes\nn = 3\nseed = 7\n").unwrap();
    let cfg = cfg.to_string_lossy();
    let r = json(&ellq(&["verify", "--config", &cfg, "--seed", "9"], &[]));
    assert_eq!(r["suite"], "modes");
    assert_eq!(r["params"]["N"], 3);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["params"]["r"], 7.3);
}

#[test]
fn csv_output_and_file_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = ellq(&["verify", "--suite", "rmatrix", "--format", "csv", "--out", &path.to_string_lossy()], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,name,residual,tol,pass"));
    assert!(lines.all(|l| l.starts_with("rmatrix,rmatrix/")));
}

#[test]
fn tol_override_can_fail_a_passing_suite() {
    let out = ellq(&["verify", "--suite", "theta", "--tol", "0"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert!(r["cases"].as_array().unwrap().iter().all(|c| c["tol"] == 0.0));
}

#[test]
fn thread_env_var_is_validated() {
    assert_eq!(ellq(&["verify", "--suite", "theta"], &[("ELLQ_THREADS", "zero")]).status.code(), Some(4));
    assert_eq!(ellq(&["verify", "--suite", "theta"], &[("ELLQ_THREADS", "2")]).status.code(), Some(0));
}
