use std::process::{Command, Output};

fn qstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qstat"))
        .args(args)
        .env_remove("QSTAT_THREADS")
        .output()
        .expect("spawn qstat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn single_engine_has_unit_ratio() {
    let o = qstat(&["analytic", "--N", "1", "--set", "delta=2.3", "--set", "beta_c_e0=0.7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let e = header.iter().position(|h| *h == "E_analytic").unwrap();
    assert_eq!(row[e].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(qstat(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qstat(&["analytic", "--set", "gamma=1"]).status.code(), Some(2));
    assert_eq!(qstat(&["analytic", "--method", "guess"]).status.code(), Some(2));
    assert_eq!(qstat(&["figure", "fig9"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"engine\": {\"n\": 2},\n  \"engine_typo\": 1\n}\n").unwrap();
    let o = qstat(&["analytic", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("engine_typo") && err.contains("line 3"), "{err}");
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "engine": {"delta": 1.4},
  "sweep": {"axes": [{"name": "n", "values": [1, 2, 3]}], "seed": 11}
}"#,
    )
    .unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = qstat(&["--threads", "2", "analytic", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(out_a.join("data.csv")).unwrap();
    assert_eq!(a, std::fs::read(out_b.join("data.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 4);

    // The manifest re-ingests to the same run.
    let manifest = out_a.join("manifest.json");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["tool"], "qstat");
    assert_eq!(m["threads"], 2);
    assert_eq!(m["cells"], 3);
    let out_c = dir.path().join("c");
    let o = qstat(&["analytic", "--config", manifest.to_str().unwrap(), "--out", out_c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(a, std::fs::read(out_c.join("data.csv")).unwrap());
}

#[test]
fn threads_fall_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qstat"))
        .args(["analytic", "--out", dir.path().to_str().unwrap()])
        .env("QSTAT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["threads"], 3);
}

#[test]
fn evolve_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = qstat(&["evolve", "--N", "2", "--set", "dim=6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,tr_rho,leakage,h_s\n"));
    assert!(trace.lines().count() >= 3);
}

#[test]
fn failed_cells_give_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"sweep": {"axes": [{"name": "period", "values": [20, -1]}]}}"#).unwrap();
    let o = qstat(&["analytic", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().ends_with("outside [0; -1]"));
}

#[test]
fn figure_runs_its_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let o = qstat(&["figure", "fig2b", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
    let csv = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert!(csv.starts_with("N,beta_c_e0,w_indist,sqrt_ratio\n"));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(m["assertions"].as_array().unwrap().iter().all(|a| a["pass"] == true));

    let o = qstat(&["fermi", "--N", "3", "--set", "beta_com_omega=5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("N,beta_com_omega,lambda"));
    let o = qstat(&["region", "--set", "n=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
