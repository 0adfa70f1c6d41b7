use std::fs;
use std::process::{Command, Output};

fn gpring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpring"))
        .args(args)
        .env_remove("GPRING_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn q_profile_prints_the_critical_strength() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gpring(&["q-profile", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!((v["a_star"].as_f64().unwrap() - 11.7008965).abs() < 1e-5);
    assert!(tmp.path().join("q_profile.json").exists());
    assert!(tmp.path().join("q_profile.csv").exists());
}

#[test]
fn eig_reports_the_first_eigenvalue() {
    let o = gpring(&["eig", "--n", "64", "--box", "12", "--ring-radius", "0"]);
    assert!(o.status.success());
    assert!((stdout_json(&o)["mu1"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn ground_state_writes_dump_and_slice() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let o = gpring(&["ground-state", "--a", "3", "--n", "64", "--box", "10", "--out", dir]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ground_state.json", "ground_state.gpf", "ground_state_slice.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let e = stdout_json(&o)["energy"].as_f64().unwrap();
    // Restarting from the dump converges at once to the same state.
    let init = tmp.path().join("ground_state.gpf");
    let again = tmp.path().join("again");
    let o = gpring(&[
        "ground-state",
        "--a",
        "3",
        "--n",
        "64",
        "--box",
        "10",
        "--init",
        init.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!((stdout_json(&o)["energy"].as_f64().unwrap() - e).abs() < 1e-10);
}

#[test]
fn env_var_overrides_the_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gpring"))
        .args(["ground-state", "--a", "1", "--n", "64", "--box", "10", "--out", "/nonexistent/ignored"])
        .env("GPRING_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("ground_state.gpf").exists());
}

#[test]
fn sweep_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let o = gpring(&["sweep", "--schedule", "0, 1.2, 6", "--n", "64", "--box", "10", "--out", dir]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("states/gs_002.gpf").exists());
    assert!(tmp.path().join("records.csv").exists());
    let o = gpring(&["analyze", "--sweep", dir]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["scaling.csv", "report.json", "energy.dat"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(tmp.path().join("scaling.csv")).unwrap();
    assert!(header.starts_with("gap,energy,coefficient,quartic,asymmetry,scaled_offset,profile_err"));
    // On this coarse grid the near-critical probe collapses to the grid
    // scale; that is reported, not fatal.
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    let uniq = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "uniqueness").unwrap();
    assert!(uniq["passed"].is_null());
    assert!(report["probe_error"].as_str().unwrap().contains("probe solve failed"));
}

#[test]
fn gn_test_stays_below_one() {
    let o = gpring(&["gn-test", "--n", "64", "--count", "30"]);
    assert!(o.status.success());
    assert!(stdout_json(&o)["max_ratio"].as_f64().unwrap() <= 1.0 + 1e-3);
}

#[test]
fn exit_codes_name_the_failure() {
    // Validation.
    let o = gpring(&["eig", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gpring(&["sweep", "--schedule", "3, 1", "--n", "64"]);
    assert_eq!(o.status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "n = 64\nbox = \n").unwrap();
    let o = gpring(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // Solver: the iteration budget is far too small.
    let o = gpring(&["ground-state", "--a", "5", "--n", "64", "--box", "10", "--max-iters", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[sweep]"));
    // Analysis: a directory without a config.
    let o = gpring(&["analyze", "--sweep", tmp.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn run_executes_the_whole_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "[grid]\nn = 64\nbox = 10\n[potential]\npotential = ring\nring_radius = 1\n[schedule]\nschedule = [0, 1.17, 5.8]\n[probe]\nstarts = 2\nhigh_gap = 0.5\n[run]\nseed = 4\noutput_dir = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = gpring(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["checks"].as_array().unwrap().len() >= 10);
    assert!(out.join("manifest.json").exists());
}
