//! Stage orchestration: q-profile, sweep, analyze, plus the on-disk layout
//! shared with the command-line tool.
//!
//! ```text
//! <out>/config.txt          canonical config, every default written out
//! <out>/manifest.json       a*, version, config hash, stage status
//! <out>/q_profile.json/.csv
//! <out>/states/gs_NNN.json  one GroundState per strength (field in .gpf)
//! <out>/sweep.csv
//! <out>/records.csv, scaling.csv, report.json, *.dat
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{self, ScalingReport, SweepRecord, UniquenessReport};
use crate::config::{self, RunConfig};
use crate::dump;
use crate::error::{AnalysisError, PipelineError, SolverError};
use crate::grid::{self, Field2D, Grid2D};
use crate::par;
use crate::potential::{self, PotentialSpec};
use crate::solver::{self, GroundState};
use crate::townes::{self, RadialProfile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scales tried against the rescaled minimizer, in units of `λ₀`.
pub const BETA_RATIOS: [f64; 3] = [0.8, 1.0, 1.25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub q0: f64,
    pub a_star: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub second_moment: f64,
    pub lambda0: f64,
    pub predicted_coefficient: f64,
    pub kinetic_mass_residual: f64,
    pub quartic_mass_residual: f64,
    pub match_radius: f64,
    pub r_max: f64,
    pub step: f64,
}

impl ProfileSummary {
    pub fn of(p: &RadialProfile) -> Self {
        let res = p.identity_residuals();
        ProfileSummary {
            q0: p.q0,
            a_star: p.a_star(),
            kinetic: p.kinetic,
            quartic: p.quartic,
            second_moment: p.second_moment,
            lambda0: townes::lambda0(p),
            predicted_coefficient: townes::predicted_coefficient(p),
            kinetic_mass_residual: res.kinetic_mass,
            quartic_mass_residual: res.quartic_mass,
            match_radius: p.match_radius,
            r_max: p.r_max,
            step: p.step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the run has no data for it.
    pub passed: Option<bool>,
    pub detail: String,
}

fn check(name: &str, passed: Option<bool>, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probes {
    pub low_a: f64,
    pub low: UniquenessReport,
    pub high_a: f64,
    pub high: UniquenessReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub profile: ProfileSummary,
    /// First eigenvalue of `-Δ + V`, when the schedule starts at `a = 0`.
    pub mu1: Option<f64>,
    pub records: Vec<SweepRecord>,
    pub scaling: Option<ScalingReport>,
    pub scaling_error: Option<String>,
    /// `(β/λ₀, profile_err)` at the smallest window gap.
    pub beta_scan: Vec<(f64, f64)>,
    /// Smallest `a` whose minimizer has asymmetry above `1e-3`; observed, not
    /// a prediction.
    pub symmetry_onset: Option<f64>,
    pub probes: Option<Probes>,
    /// Why the probes are missing when they were requested: a probe solve
    /// that did not converge.
    pub probe_error: Option<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub a_star: f64,
    pub config_sha256: String,
    pub schedule: Vec<f64>,
    pub stages: Vec<StageStatus>,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub done: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub a: Option<f64>,
    pub kind: String,
    pub message: String,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(config::emit(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    dump::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    Ok(dump::write_atomic(path, text.as_bytes())?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn shoot(cfg: &RunConfig) -> Result<RadialProfile, PipelineError> {
    Ok(townes::shoot_q(cfg.profile.r_max, cfg.profile.step, cfg.profile.tol)?)
}

pub fn write_profile(dir: &Path, profile: &RadialProfile) -> Result<(), PipelineError> {
    write_json(&dir.join("q_profile.json"), &ProfileSummary::of(profile))?;
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["r", "q", "dq"])?;
    let stride = ((0.01 / profile.step).round() as usize).max(1);
    for (k, r) in profile.radii().enumerate().step_by(stride) {
        w.write_record([r.to_string(), profile.values[k].to_string(), profile.slopes[k].to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    dump::write_atomic(&dir.join("q_profile.csv"), &bytes)?;
    Ok(())
}

fn state_stem(k: usize) -> String {
    format!("gs_{k:03}")
}

pub fn write_state(dir: &Path, k: usize, gs: &GroundState) -> Result<(), PipelineError> {
    let states = dir.join("states");
    fs::create_dir_all(&states)?;
    write_json(&states.join(format!("{}.json", state_stem(k))), gs)?;
    dump::write_field(&states.join(format!("{}.gpf", state_stem(k))), &gs.field)?;
    Ok(())
}

/// Loads every `states/gs_NNN` pair in index order.
pub fn read_states(dir: &Path) -> Result<Vec<GroundState>, PipelineError> {
    let states = dir.join("states");
    let mut out = vec![];
    for k in 0.. {
        let json = states.join(format!("{}.json", state_stem(k)));
        if !json.exists() {
            break;
        }
        let mut gs: GroundState = serde_json::from_str(&fs::read_to_string(&json)?)?;
        gs.field = dump::read_field(&states.join(format!("{}.gpf", state_stem(k))))
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        out.push(gs);
    }
    Ok(out)
}

fn write_sweep_csv(dir: &Path, states: &[GroundState]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["a", "energy", "multiplier", "residual", "iters"])?;
    for s in states {
        w.write_record([
            s.a.to_string(),
            s.energy.to_string(),
            s.multiplier.to_string(),
            s.residual.to_string(),
            s.iters.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(dump::write_atomic(&dir.join("sweep.csv"), &bytes)?)
}

pub fn records_csv(records: &[SweepRecord]) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "a",
        "gap",
        "energy",
        "multiplier",
        "quartic_norm",
        "eps",
        "max_x",
        "max_y",
        "ring_offset",
        "scaled_offset",
        "profile_err",
        "asymmetry",
        "in_window",
    ])?;
    for r in records {
        w.write_record([
            r.a.to_string(),
            r.gap.to_string(),
            r.energy.to_string(),
            r.multiplier.to_string(),
            r.quartic_norm.to_string(),
            r.eps.to_string(),
            r.max_point.0.to_string(),
            r.max_point.1.to_string(),
            r.ring_offset.to_string(),
            r.scaled_offset.to_string(),
            opt(r.profile_err),
            r.asymmetry.to_string(),
            r.in_window.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
}

pub fn scaling_csv(records: &[SweepRecord]) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "gap",
        "energy",
        "coefficient",
        "quartic",
        "asymmetry",
        "scaled_offset",
        "profile_err",
    ])?;
    for r in records {
        w.write_record([
            r.gap.to_string(),
            r.energy.to_string(),
            (r.energy / r.gap.sqrt()).to_string(),
            r.quartic_norm.to_string(),
            r.asymmetry.to_string(),
            r.scaled_offset.to_string(),
            opt(r.profile_err),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
}

fn dat(header: &str, rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = format!("# {header}\n");
    for (x, y) in rows {
        s.push_str(&format!("{x:e} {y:e}\n"));
    }
    s
}

fn write_dat_files(dir: &Path, records: &[SweepRecord]) -> Result<(), PipelineError> {
    let all = || records.iter();
    let files: [(&str, String); 6] = [
        ("energy.dat", dat("gap e(a)", all().map(|r| (r.gap, r.energy)))),
        (
            "coefficient.dat",
            dat("gap e(a)/gap^(1/2)", all().map(|r| (r.gap, r.energy / r.gap.sqrt()))),
        ),
        ("quartic.dat", dat("gap int(u^4)", all().map(|r| (r.gap, r.quartic_norm)))),
        ("offset.dat", dat("gap scaled_offset", all().map(|r| (r.gap, r.scaled_offset)))),
        (
            "profile_err.dat",
            dat(
                "gap profile_err",
                all().filter_map(|r| r.profile_err.map(|e| (r.gap, e))),
            ),
        ),
        ("asymmetry.dat", dat("a asymmetry", all().map(|r| (r.a, r.asymmetry)))),
    ];
    for (name, text) in files {
        write_text(&dir.join(name), &text)?;
    }
    Ok(())
}

fn monotone_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Pass/fail per acceptance check, from already-computed quantities.
pub fn evaluate_checks(report: &Report, low_fraction: f64) -> Vec<Check> {
    let p = &report.profile;
    let mut out = vec![];
    let id = p.kinetic_mass_residual.max(p.quartic_mass_residual);
    out.push(check("townes_identities", Some(id <= 1e-6), format!("max relative residual {id:e}")));

    let e0 = report.records.iter().find(|r| r.a == 0.0).map(|r| r.energy);
    out.push(match (e0, report.mu1) {
        (Some(e), Some(m)) => check("e0_equals_mu1", Some((e - m).abs() <= 1e-6), format!("|e(0) - mu1| = {:e}", (e - m).abs())),
        _ => check("e0_equals_mu1", None, "schedule does not start at a = 0".into()),
    });

    let window: Vec<&SweepRecord> = report.records.iter().filter(|r| r.in_window).collect();
    match &report.scaling {
        Some(s) => {
            out.push(check(
                "energy_exponent",
                Some((0.45..=0.55).contains(&s.exponent_fit)),
                format!("fit {}", s.exponent_fit),
            ));
            out.push(check(
                "lower_bound",
                Some(s.lower_bound_respected && s.exponent_fit >= 0.45),
                format!("envelope constant {:?}", s.lower_envelope),
            ));
            let rel = (s.coefficient_at_smallest_gap - s.predicted).abs() / s.predicted;
            out.push(check(
                "coefficient",
                Some(rel <= 0.1),
                format!("{} vs {} (relative {rel:e})", s.coefficient_at_smallest_gap, s.predicted),
            ));
            out.push(check(
                "quartic_exponent",
                Some((-0.55..=-0.45).contains(&s.quartic_exponent_fit)),
                format!("fit {}", s.quartic_exponent_fit),
            ));
            out.push(check(
                "multiplier_band",
                Some(s.multiplier_band_ratio <= 3.0),
                format!("max/min |eps^2 mu| = {}", s.multiplier_band_ratio),
            ));
        }
        None => {
            let why = report.scaling_error.clone().unwrap_or_default();
            for name in ["energy_exponent", "lower_bound", "coefficient", "quartic_exponent", "multiplier_band"] {
                out.push(check(name, None, why.clone()));
            }
        }
    }

    if window.len() >= 2 {
        let offsets: Vec<f64> = window.iter().map(|r| r.scaled_offset.abs()).collect();
        let last = *offsets.last().unwrap();
        out.push(check(
            "scaled_offset",
            Some(monotone_decreasing(&offsets) && last < 0.1),
            format!("|scaled_offset| over window {offsets:?}"),
        ));
        let errs: Vec<f64> = window.iter().filter_map(|r| r.profile_err).collect();
        let last = errs.last().copied().unwrap_or(f64::INFINITY);
        out.push(check(
            "profile_err",
            Some(monotone_decreasing(&errs) && last <= 0.05),
            format!("over window {errs:?}"),
        ));
    } else {
        out.push(check("scaled_offset", None, "fewer than two window points".into()));
        out.push(check("profile_err", None, "fewer than two window points".into()));
    }
    out.push(if report.beta_scan.len() == 3 {
        let e: Vec<f64> = report.beta_scan.iter().map(|b| b.1).collect();
        check("beta_selection", Some(e[1] < e[0] && e[1] < e[2]), format!("{:?}", report.beta_scan))
    } else {
        check("beta_selection", None, "no window point".into())
    });

    let low = report
        .records
        .iter()
        .find(|r| (r.a - low_fraction * p.a_star).abs() <= 1e-12 * p.a_star)
        .map(|r| r.asymmetry);
    let last = report.records.last().map(|r| r.asymmetry);
    out.push(match (low, last) {
        (Some(lo), Some(hi)) => check(
            "asymmetry",
            Some(lo <= 1e-6 && hi >= 0.1),
            format!("{lo:e} at {low_fraction} a*, {hi} at the last strength"),
        ),
        _ => check("asymmetry", None, format!("schedule lacks {low_fraction} a*")),
    });
    out.push(match &report.probes {
        Some(pr) => check(
            "uniqueness",
            Some(
                pr.low.max_pairwise_dist <= 1e-5
                    && pr.high.max_pairwise_dist > 0.1
                    && pr.high.max_mod_rotation_dist <= 5e-2,
            ),
            format!(
                "low {:e}; high {} (mod rotation {:e})",
                pr.low.max_pairwise_dist, pr.high.max_pairwise_dist, pr.high.max_mod_rotation_dist
            ),
        ),
        None => check(
            "uniqueness",
            None,
            report.probe_error.clone().unwrap_or_else(|| "probes disabled".into()),
        ),
    });
    out
}

/// Analysis of a finished sweep. Pure function of its inputs.
pub fn analyze(
    cfg: &RunConfig,
    profile: &RadialProfile,
    states: &[GroundState],
    v: &PotentialSpec,
) -> Result<Report, PipelineError> {
    let ring = v.ring_radius().unwrap_or(0.0);
    let records = states
        .iter()
        .map(|gs| asymptotics::sweep_record(gs, profile, ring))
        .collect::<Result<Vec<_>, _>>()?;
    let min_resolved = (asymptotics::RESOLUTION_CELLS * cfg.grid.spacing()).powi(4);
    let (scaling, scaling_error) = match asymptotics::scaling_from_records(&records, profile, ring, min_resolved) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let lambda = townes::lambda0(profile);
    let smallest = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.in_window)
        .min_by(|a, b| a.1.gap.total_cmp(&b.1.gap))
        .map(|(k, _)| k);
    let beta_scan = match smallest {
        Some(k) => {
            let betas: Vec<f64> = BETA_RATIOS.iter().map(|r| r * lambda).collect();
            let errs = asymptotics::beta_scan(&states[k], profile, &betas)?;
            BETA_RATIOS.iter().copied().zip(errs).collect()
        }
        None => vec![],
    };
    let mu1 = if states.first().is_some_and(|s| s.a == 0.0) {
        Some(solver::first_eigenpair(v, &cfg.grid, &cfg.solver).map_err(AnalysisError::from)?.0)
    } else {
        None
    };
    let (probes, probe_error) = if cfg.probe.starts > 0 {
        let a_star = profile.a_star();
        let low_a = cfg.probe.low_fraction * a_star;
        let high_a = a_star - cfg.probe.high_gap;
        let grid = match cfg.probe.n {
            0 => cfg.grid,
            n => Grid2D::new(n, cfg.grid.box_length)?,
        };
        let pv = potential::tabulate(&cfg.potential_spec(), &grid);
        let probe = |a| asymptotics::uniqueness_probe(&pv, &grid, a, cfg.probe.starts, cfg.seed, &cfg.solver);
        match probe(low_a).and_then(|low| Ok((low, probe(high_a)?))) {
            Ok((low, high)) => (Some(Probes { low_a, low, high_a, high }), None),
            Err(AnalysisError::Solver(e)) => (None, Some(format!("probe solve failed: {e}"))),
            Err(e) => return Err(e.into()),
        }
    } else {
        (None, None)
    };
    let symmetry_onset = records.iter().find(|r| r.asymmetry > 1e-3).map(|r| r.a);
    let mut report = Report {
        version: VERSION.to_string(),
        profile: ProfileSummary::of(profile),
        mu1,
        records,
        scaling,
        scaling_error,
        beta_scan,
        symmetry_onset,
        probes,
        probe_error,
        checks: vec![],
    };
    report.checks = evaluate_checks(&report, cfg.probe.low_fraction);
    Ok(report)
}

pub fn write_analysis(dir: &Path, report: &Report) -> Result<(), PipelineError> {
    dump::write_atomic(&dir.join("records.csv"), &records_csv(&report.records)?)?;
    dump::write_atomic(&dir.join("scaling.csv"), &scaling_csv(&report.records)?)?;
    write_dat_files(dir, &report.records)?;
    write_json(&dir.join("report.json"), report)
}

/// Reloads a sweep directory written by [`run_pipeline`] or the `sweep`
/// command and (re)writes its analysis outputs.
pub fn analyze_dir(dir: &Path) -> Result<Report, PipelineError> {
    let cfg = config::parse_config(&fs::read_to_string(dir.join("config.txt"))?)?;
    par::with_workers(cfg.workers, || {
        let profile = shoot(&cfg)?;
        let states = read_states(dir)?;
        let v = potential::tabulate(&cfg.potential_spec(), &cfg.grid);
        let report = analyze(&cfg, &profile, &states, &v)?;
        write_analysis(dir, &report)?;
        Ok(report)
    })
}

#[derive(Debug)]
pub struct Outcome {
    pub output_dir: PathBuf,
    pub report: Report,
}

fn stage_list(done: &[&str]) -> Vec<StageStatus> {
    ["q-profile", "sweep", "analyze"]
        .iter()
        .map(|s| StageStatus {
            stage: s.to_string(),
            done: done.contains(s),
        })
        .collect()
}

/// Failed strength and error kind, looking through the `AtStrength` tag.
fn describe(e: &SolverError) -> (Option<f64>, String) {
    let a = match e {
        SolverError::AtStrength { a, .. } => Some(*a),
        _ => None,
    };
    let kind = match e.root() {
        SolverError::CollapseDetected { .. } => "CollapseDetected",
        SolverError::MaxItersExceeded { .. } => "MaxItersExceeded",
        SolverError::InvalidInput(_) => "InvalidInput",
        _ => "Solver",
    };
    (a, kind.to_string())
}

/// Runs q-profile, sweep and analyze into `cfg.output_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Outcome, PipelineError> {
    par::with_workers(cfg.workers, || run_stages(cfg))
}

fn run_stages(cfg: &RunConfig) -> Result<Outcome, PipelineError> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    write_text(&dir.join("config.txt"), &config::emit(cfg))?;

    let profile = shoot(cfg)?;
    write_profile(&dir, &profile)?;
    let schedule = cfg.schedule.resolve(profile.a_star());
    let mut manifest = Manifest {
        version: VERSION.to_string(),
        a_star: profile.a_star(),
        config_sha256: config_hash(cfg),
        schedule: schedule.clone(),
        stages: stage_list(&["q-profile"]),
        failure: None,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    let v = potential::tabulate(&cfg.potential_spec(), &cfg.grid);
    let mut io_error: Option<PipelineError> = None;
    let swept = solver::continuation_sweep_with(&v, &cfg.grid, &schedule, &cfg.solver, cfg.seed, |k, gs| {
        if io_error.is_none() {
            if let Err(e) = write_state(&dir, k, gs) {
                io_error = Some(e);
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let states = match swept {
        Ok(s) => s,
        Err(e) => {
            let (a, kind) = describe(&e);
            manifest.failure = Some(Failure {
                stage: "sweep".into(),
                a,
                kind,
                message: e.to_string(),
            });
            write_json(&dir.join("manifest.json"), &manifest)?;
            if let Ok(done) = read_states(&dir) {
                write_sweep_csv(&dir, &done)?;
            }
            return Err(e.into());
        }
    };
    write_sweep_csv(&dir, &states)?;
    manifest.stages = stage_list(&["q-profile", "sweep"]);
    write_json(&dir.join("manifest.json"), &manifest)?;

    let report = match analyze(cfg, &profile, &states, &v) {
        Ok(r) => r,
        Err(e) => {
            manifest.failure = Some(Failure {
                stage: e.stage().into(),
                a: None,
                kind: "Analysis".into(),
                message: e.to_string(),
            });
            write_json(&dir.join("manifest.json"), &manifest)?;
            return Err(e);
        }
    };
    write_analysis(&dir, &report)?;
    manifest.stages = stage_list(&["q-profile", "sweep", "analyze"]);
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(Outcome { output_dir: dir, report })
}

/// Unit-mass field from a dump, for `--init`.
pub fn load_init(path: &Path) -> Result<Field2D, PipelineError> {
    let u = dump::read_field(path).map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(grid::normalize(&u)?)
}
