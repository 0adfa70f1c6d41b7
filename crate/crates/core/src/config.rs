//! Plain-text run configuration: `key = value` lines, optional `[section]`
//! headers, `#` comments.
//!
//! ```text
//! [grid]
//! n = 256
//! box = 16
//!
//! [potential]
//! potential = ring
//! ring_radius = 1
//!
//! [schedule]
//! fractions = 0, 0.1, 0.2
//! count = 8
//! min_gap = 1e-3
//! max_gap = 1e-1
//! ```
//!
//! Every key lives in exactly one section; a key may also appear before any
//! header. [`emit`] writes every field, defaults included, and parses back to
//! an identical [`RunConfig`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::asymptotics::RESOLUTION_CELLS;
use crate::error::ConfigError;
use crate::grid::Grid2D;
use crate::potential::{PotentialKind, PotentialSpec};
use crate::solver::{Method, SolveConfig};

pub const OUTPUT_DIR_ENV: &str = "GPRING_OUTPUT_DIR";

/// Used only to check the ordering of rule schedules at parse time; runs
/// resolve schedules against the shot value.
const A_STAR_NOMINAL: f64 = 11.700896524;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// Explicit strengths.
    Values(Vec<f64>),
    /// `a = fraction · a*` for each fraction, then `count` strengths with
    /// `a* - a` log-spaced from `max_gap` down to `min_gap`.
    Rule {
        fractions: Vec<f64>,
        count: usize,
        min_gap: f64,
        max_gap: f64,
    },
}

impl Schedule {
    pub fn resolve(&self, a_star: f64) -> Vec<f64> {
        match self {
            Schedule::Values(v) => v.clone(),
            Schedule::Rule {
                fractions,
                count,
                min_gap,
                max_gap,
            } => {
                let mut out: Vec<f64> = fractions.iter().map(|f| f * a_star).collect();
                out.extend(log_gaps(*count, *min_gap, *max_gap).into_iter().map(|g| a_star - g));
                out
            }
        }
    }
}

/// `count` gaps from `max_gap` down to `min_gap`, log-spaced, endpoints exact.
pub fn log_gaps(count: usize, min_gap: f64, max_gap: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![max_gap],
        _ => {
            let (lo, hi) = (min_gap.ln(), max_gap.ln());
            (0..count)
                .map(|k| match k {
                    0 => max_gap,
                    k if k == count - 1 => min_gap,
                    k => (hi + (lo - hi) * k as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub r_max: f64,
    pub step: f64,
    pub tol: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            r_max: 40.0,
            step: 1e-3,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Random starts per probe; 0 skips the probes.
    pub starts: usize,
    /// Low probe at `low_fraction · a*`.
    pub low_fraction: f64,
    /// High probe at `a* - high_gap`.
    pub high_gap: f64,
    /// Grid points per side for the probe solves, on the sweep box;
    /// 0 reuses the sweep grid.
    pub n: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            starts: 5,
            low_fraction: 0.1,
            high_gap: 1e-2,
            n: 0,
        }
    }
}

impl ProbeConfig {
    /// Smallest `a* - a` the probe grid resolves: `ε_a ≥ 3h`.
    pub fn min_gap(&self, sweep: &Grid2D) -> f64 {
        let h = match self.n {
            0 => sweep.spacing(),
            n => sweep.box_length / n as f64,
        };
        (RESOLUTION_CELLS * h).powi(4)
    }

    /// Defaults, with `high_gap` raised to the resolution floor of `sweep`.
    pub fn for_grid(sweep: &Grid2D) -> Self {
        let d = ProbeConfig::default();
        ProbeConfig {
            high_gap: d.high_gap.max(d.min_gap(sweep)),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: Grid2D,
    pub potential: PotentialKind,
    pub solver: SolveConfig,
    pub schedule: Schedule,
    pub profile: ProfileConfig,
    pub probe: ProbeConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl RunConfig {
    pub fn potential_spec(&self) -> PotentialSpec {
        match &self.potential {
            PotentialKind::Ring { radius } => PotentialSpec::ring(*radius),
            PotentialKind::PolyProduct { points, powers } => PotentialSpec::poly_product(points.clone(), powers.clone()),
        }
    }

    /// Applies `GPRING_OUTPUT_DIR` if set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
        self
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["n", "box"]),
    ("potential", &["potential", "ring_radius", "points"]),
    (
        "solver",
        &[
            "step_size",
            "residual_tol",
            "max_iters",
            "collapse_floor",
            "perturb_amplitude",
            "method",
            "precond_shift",
        ],
    ),
    ("schedule", &["schedule", "fractions", "count", "min_gap", "max_gap"]),
    ("profile", &["r_max", "step", "tol"]),
    ("probe", &["starts", "low_fraction", "high_gap", "probe_n"]),
    ("run", &["seed", "output_dir", "workers"]),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

struct Doc(std::collections::BTreeMap<String, Entry>);

impl Doc {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.0.get(key)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| parse_err(e.line, format!("cannot read `{}` as a value for `{key}`", e.value))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => {
                let body = e.value.trim().trim_start_matches('[').trim_end_matches(']');
                if body.trim().is_empty() {
                    return Ok(Some(vec![]));
                }
                body.split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
                    .map_err(|_| parse_err(e.line, format!("`{key}` must be a comma-separated list of numbers")))
            }
        }
    }
}

fn parse_points(e: &Entry) -> Result<(Vec<(f64, f64)>, Vec<f64>), ConfigError> {
    let body = e.value.trim();
    let body = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| parse_err(e.line, "points must look like [(x, y, p), ...]"))?;
    let mut points = vec![];
    let mut powers = vec![];
    for chunk in body.split(')') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        let inner = chunk
            .strip_prefix('(')
            .ok_or_else(|| parse_err(e.line, format!("expected `(` in `{chunk}`")))?;
        let nums: Vec<f64> = inner
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(e.line, format!("bad number in `({inner})`")))?;
        if nums.len() != 3 {
            return Err(parse_err(e.line, "each point needs exactly (x, y, p)"));
        }
        points.push((nums[0], nums[1]));
        powers.push(nums[2]);
    }
    Ok((points, powers))
}

fn tokenize(text: &str) -> Result<Doc, ConfigError> {
    let mut map = std::collections::BTreeMap::new();
    let mut section: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(parse_err(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(parse_err(line, "missing key"));
        }
        if value.is_empty() {
            return Err(parse_err(line, format!("missing value for `{key}`")));
        }
        let home = section_of(key).ok_or_else(|| parse_err(line, format!("unknown key `{key}`")))?;
        if let Some(s) = &section {
            if s != home {
                return Err(parse_err(line, format!("`{key}` belongs in [{home}], not [{s}]")));
            }
        }
        if map.contains_key(key) {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(Doc(map))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc = tokenize(text)?;

    let n: usize = doc.get("n")?.ok_or_else(|| invalid("n", "required"))?;
    let box_length: f64 = doc.get("box")?.ok_or_else(|| invalid("box", "required"))?;
    let grid = Grid2D::new(n, box_length).map_err(|e| invalid(if n < 64 || !n.is_power_of_two() { "n" } else { "box" }, e.to_string()))?;

    let kind: String = doc.get("potential")?.unwrap_or_else(|| "ring".to_string());
    let potential = match kind.as_str() {
        "ring" => {
            let radius: f64 = doc.get("ring_radius")?.ok_or_else(|| invalid("ring_radius", "required for a ring"))?;
            if !(radius >= 0.0 && radius.is_finite()) {
                return Err(invalid("ring_radius", "must be a finite number >= 0"));
            }
            PotentialKind::Ring { radius }
        }
        "poly" => {
            let e = doc.raw("points").ok_or_else(|| invalid("points", "required for a poly potential"))?;
            let (points, powers) = parse_points(e)?;
            if points.is_empty() {
                return Err(invalid("points", "need at least one point"));
            }
            if powers.iter().any(|p| !(*p > 0.0)) {
                return Err(invalid("points", "exponents must be positive"));
            }
            PotentialKind::PolyProduct { points, powers }
        }
        other => return Err(invalid("potential", format!("`{other}` is neither ring nor poly"))),
    };

    let d = SolveConfig::default();
    let method = match doc.get::<String>("method")?.as_deref() {
        None => d.method,
        Some("cg") => Method::ConjugateGradient,
        Some("gradient") => Method::GradientFlow,
        Some(other) => return Err(invalid("method", format!("`{other}` is neither cg nor gradient"))),
    };
    let solver = SolveConfig {
        step_size: doc.get("step_size")?.unwrap_or(d.step_size),
        residual_tol: doc.get("residual_tol")?.unwrap_or(d.residual_tol),
        max_iters: doc.get("max_iters")?.unwrap_or(d.max_iters),
        collapse_floor: doc.get("collapse_floor")?.unwrap_or(d.collapse_floor),
        perturb_amplitude: doc.get("perturb_amplitude")?.unwrap_or(d.perturb_amplitude),
        method,
        precond_shift: doc.get("precond_shift")?.unwrap_or(d.precond_shift),
    };
    for (field, ok) in [
        ("step_size", solver.step_size > 0.0),
        ("residual_tol", solver.residual_tol > 0.0),
        ("max_iters", solver.max_iters > 0),
        ("collapse_floor", solver.collapse_floor < 0.0),
        ("perturb_amplitude", solver.perturb_amplitude >= 0.0),
        ("precond_shift", solver.precond_shift > 0.0),
    ] {
        if !ok {
            return Err(invalid(field, "out of range"));
        }
    }

    let rule_keys = ["fractions", "count", "min_gap", "max_gap"];
    let schedule = match doc.list("schedule")? {
        Some(values) => {
            if let Some(k) = rule_keys.iter().find(|k| doc.raw(k).is_some()) {
                return Err(invalid(k, "cannot be combined with an explicit schedule"));
            }
            Schedule::Values(values)
        }
        None => {
            let fractions = doc.list("fractions")?.unwrap_or_default();
            let count: usize = doc.get("count")?.unwrap_or(8);
            let min_gap: f64 = doc.get("min_gap")?.unwrap_or(1e-3);
            let max_gap: f64 = doc.get("max_gap")?.unwrap_or(1e-1);
            if !(min_gap > 0.0) {
                return Err(invalid("min_gap", "must be positive"));
            }
            if !(max_gap >= min_gap) {
                return Err(invalid("max_gap", "must be at least min_gap"));
            }
            if fractions.iter().any(|f| !(*f >= 0.0)) {
                return Err(invalid("fractions", "must be non-negative"));
            }
            Schedule::Rule {
                fractions,
                count,
                min_gap,
                max_gap,
            }
        }
    };
    let resolved = schedule.resolve(A_STAR_NOMINAL);
    if resolved.is_empty() {
        return Err(invalid("schedule", "is empty"));
    }
    if resolved.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("schedule", "must be strictly increasing"));
    }
    if resolved.iter().any(|a| !(*a >= 0.0)) {
        return Err(invalid("schedule", "strengths must be non-negative"));
    }

    let dp = ProfileConfig::default();
    let profile = ProfileConfig {
        r_max: doc.get("r_max")?.unwrap_or(dp.r_max),
        step: doc.get("step")?.unwrap_or(dp.step),
        tol: doc.get("tol")?.unwrap_or(dp.tol),
    };
    if !(profile.r_max >= 15.0) {
        return Err(invalid("r_max", "must be at least 15"));
    }
    if !(profile.step > 0.0 && profile.step <= 1e-3) {
        return Err(invalid("step", "must lie in (0, 1e-3]"));
    }
    if !(profile.tol > 0.0 && profile.tol <= 1e-10) {
        return Err(invalid("tol", "must lie in (0, 1e-10]"));
    }

    let dq = ProbeConfig::default();
    let mut probe = ProbeConfig {
        starts: doc.get("starts")?.unwrap_or(dq.starts),
        low_fraction: doc.get("low_fraction")?.unwrap_or(dq.low_fraction),
        high_gap: dq.high_gap,
        n: doc.get("probe_n")?.unwrap_or(dq.n),
    };
    if probe.n != 0 && Grid2D::new(probe.n, box_length).is_err() {
        return Err(invalid("probe_n", "must be 0 or a power of two >= 64"));
    }
    // The default gap is raised to what the probe grid resolves.
    probe.high_gap = doc.get("high_gap")?.unwrap_or(dq.high_gap.max(probe.min_gap(&grid)));
    if !(probe.low_fraction >= 0.0 && probe.low_fraction < 1.0) {
        return Err(invalid("low_fraction", "must lie in [0, 1)"));
    }
    if !(probe.high_gap > 0.0) {
        return Err(invalid("high_gap", "must be positive"));
    }
    if probe.starts > 0 && probe.high_gap < probe.min_gap(&grid) {
        return Err(invalid(
            "high_gap",
            format!("below {:.3e}, the smallest gap the probe grid resolves", probe.min_gap(&grid)),
        ));
    }

    Ok(RunConfig {
        grid,
        potential,
        solver,
        schedule,
        profile,
        probe,
        seed: doc.get("seed")?.unwrap_or(0),
        output_dir: PathBuf::from(doc.get::<String>("output_dir")?.unwrap_or_else(|| "gpring-out".to_string())),
        workers: doc.get("workers")?.unwrap_or(0),
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Canonical document with every field written out.
pub fn emit(cfg: &RunConfig) -> String {
    let mut s = String::new();
    s += &format!("[grid]\nn = {}\nbox = {:?}\n\n[potential]\n", cfg.grid.n, cfg.grid.box_length);
    match &cfg.potential {
        PotentialKind::Ring { radius } => s += &format!("potential = ring\nring_radius = {radius:?}\n"),
        PotentialKind::PolyProduct { points, powers } => {
            let items: Vec<String> = points
                .iter()
                .zip(powers)
                .map(|(p, e)| format!("({:?}, {:?}, {:?})", p.0, p.1, e))
                .collect();
            s += &format!("potential = poly\npoints = [{}]\n", items.join(", "));
        }
    }
    let sv = &cfg.solver;
    let method = match sv.method {
        Method::ConjugateGradient => "cg",
        Method::GradientFlow => "gradient",
    };
    s += &format!(
        "\n[solver]\nstep_size = {:?}\nresidual_tol = {:?}\nmax_iters = {}\ncollapse_floor = {:?}\nperturb_amplitude = {:?}\nmethod = {method}\nprecond_shift = {:?}\n",
        sv.step_size, sv.residual_tol, sv.max_iters, sv.collapse_floor, sv.perturb_amplitude, sv.precond_shift
    );
    s += "\n[schedule]\n";
    match &cfg.schedule {
        Schedule::Values(v) => s += &format!("schedule = [{}]\n", join(v)),
        Schedule::Rule {
            fractions,
            count,
            min_gap,
            max_gap,
        } => {
            s += &format!(
                "fractions = [{}]\ncount = {count}\nmin_gap = {min_gap:?}\nmax_gap = {max_gap:?}\n",
                join(fractions)
            )
        }
    }
    let p = &cfg.profile;
    s += &format!("\n[profile]\nr_max = {:?}\nstep = {:?}\ntol = {:?}\n", p.r_max, p.step, p.tol);
    let q = &cfg.probe;
    s += &format!(
        "\n[probe]\nstarts = {}\nlow_fraction = {:?}\nhigh_gap = {:?}\nprobe_n = {}\n",
        q.starts, q.low_fraction, q.high_gap, q.n
    );
    s += &format!(
        "\n[run]\nseed = {}\noutput_dir = {}\nworkers = {}\n",
        cfg.seed,
        cfg.output_dir.display(),
        cfg.workers
    );
    s
}
