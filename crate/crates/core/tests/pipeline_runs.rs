use std::fs;
use std::path::Path;

use gpring::config::{self, Schedule};
use gpring::pipeline::{self, Manifest};
use gpring::{dump, PipelineError, SolverError};

const A_STAR: f64 = 11.700896524;

fn small_config(dir: &Path, schedule: Vec<f64>, workers: usize) -> gpring::RunConfig {
    let mut c = config::parse_config("potential = ring\nring_radius = 1\nn = 64\nbox = 10\nstarts = 2\n")
        .unwrap();
    c.schedule = Schedule::Values(schedule);
    c.output_dir = dir.to_path_buf();
    c.workers = workers;
    c.probe.high_gap = 0.5;
    c
}

#[test]
fn report_is_identical_across_reruns_and_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let schedule = vec![0.0, 0.1 * A_STAR, 0.5 * A_STAR, 0.8 * A_STAR];
    let mut reports = vec![];
    for (k, workers) in [1, 1, 3].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        let cfg = small_config(&dir, schedule.clone(), workers);
        pipeline::run_pipeline(&cfg).unwrap();
        reports.push(fs::read(dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn outputs_are_complete_and_dumps_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), vec![0.0, 0.1 * A_STAR, 0.5 * A_STAR], 0);
    let out = pipeline::run_pipeline(&cfg).unwrap();
    for name in [
        "config.txt",
        "manifest.json",
        "q_profile.json",
        "q_profile.csv",
        "sweep.csv",
        "records.csv",
        "scaling.csv",
        "report.json",
        "energy.dat",
        "asymmetry.dat",
        "states/gs_000.gpf",
        "states/gs_002.json",
    ] {
        assert!(tmp.path().join(name).exists(), "missing {name}");
    }
    let manifest: Manifest = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.failure.is_none());
    assert!(manifest.stages.iter().all(|s| s.done));
    assert_eq!(manifest.config_sha256, pipeline::config_hash(&cfg));
    assert!((manifest.a_star - A_STAR).abs() < 1e-4);

    let states = pipeline::read_states(tmp.path()).unwrap();
    assert_eq!(states.len(), 3);
    for gs in &states {
        let bytes = dump::encode(&gs.field);
        assert_eq!(dump::decode(&bytes).unwrap(), gs.field);
    }
    // The stored config reproduces the analysis.
    let again = pipeline::analyze_dir(tmp.path()).unwrap();
    assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&out.report).unwrap());
    // Too few concentrated states for the fits: reported, not fatal.
    assert!(out.report.scaling.is_none());
    assert!(out.report.scaling_error.is_some());
    let e0 = out.report.checks.iter().find(|c| c.name == "e0_equals_mu1").unwrap();
    assert_eq!(e0.passed, Some(true), "{e0:?}");
}

#[test]
fn crossing_the_critical_strength_stops_the_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path(), vec![0.0, 0.5 * A_STAR, 2.0 * A_STAR], 1);
    cfg.grid = gpring::Grid2D::new(64, 4.0).unwrap();
    // The discrete energy is bounded below near -0.02/h² = -5 on this grid.
    cfg.solver.collapse_floor = -1.0;
    let err = pipeline::run_pipeline(&cfg).unwrap_err();
    match &err {
        PipelineError::Solver(e) => assert!(matches!(e.root(), SolverError::CollapseDetected { .. }), "{e:?}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(err.exit_code(), 3);
    assert_eq!(err.stage(), "sweep");
    let manifest: Manifest = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    let failure = manifest.failure.unwrap();
    assert_eq!(failure.kind, "CollapseDetected");
    assert_eq!(failure.a, Some(2.0 * A_STAR));
    assert_eq!(pipeline::read_states(tmp.path()).unwrap().len(), 2);
    let sweep = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn bad_config_is_a_validation_failure() {
    let err = config::parse_config("n = 64\nbox = 8\n").unwrap_err();
    assert_eq!(PipelineError::from(err).exit_code(), 2);
}
