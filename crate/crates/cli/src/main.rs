use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gpring::config::{self, ProbeConfig, ProfileConfig, RunConfig, Schedule};
use gpring::potential::{tabulate, PotentialKind, PotentialSpec};
use gpring::{asymptotics, dump, gn, par, pipeline, solver, townes};
use gpring::{ConfigError, Grid2D, Method, PipelineError, SolveConfig};

#[derive(Parser)]
#[command(name = "gpring", version, about = "Ground states of the 2D attractive GP energy in a ring trap")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shoot the Townes profile and print a*, λ₀ and the identities.
    QProfile {
        #[arg(long, default_value_t = 40.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First eigenpair of -Δ + V.
    Eig {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One ground state at strength `a`.
    GroundState {
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        setup: Setup,
        /// GPF1 dump to start from; default is the first eigenfunction.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continuation sweep over a schedule of strengths.
    Sweep {
        /// CSV file of strengths, or an inline comma-separated list.
        #[arg(long)]
        schedule: String,
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a sweep directory: scaling.csv, report.json, .dat files.
    Analyze {
        #[arg(long)]
        sweep: PathBuf,
    },
    /// Gagliardo–Nirenberg ratio over random smooth fields.
    GnTest {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long = "box", default_value_t = 24.0)]
        box_length: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Setup {
    #[arg(long, default_value_t = 1.0)]
    ring_radius: f64,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long = "box", default_value_t = 16.0)]
    box_length: f64,
    #[arg(long, default_value_t = 1e-8)]
    residual_tol: f64,
    #[arg(long, default_value_t = 20000)]
    max_iters: usize,
    /// `cg` or `gradient`.
    #[arg(long, default_value = "cg")]
    method: String,
}

impl Setup {
    fn grid(&self) -> Result<Grid2D, ConfigError> {
        Grid2D::new(self.n, self.box_length).map_err(|e| ConfigError::Validation {
            field: if self.n < 64 || !self.n.is_power_of_two() { "n" } else { "box" }.into(),
            message: e.to_string(),
        })
    }

    fn potential(&self) -> Result<PotentialSpec, ConfigError> {
        if !(self.ring_radius >= 0.0 && self.ring_radius.is_finite()) {
            return Err(ConfigError::Validation {
                field: "ring_radius".into(),
                message: "must be a finite number >= 0".into(),
            });
        }
        Ok(PotentialSpec::ring(self.ring_radius))
    }

    fn solver(&self) -> Result<SolveConfig, ConfigError> {
        let method = match self.method.as_str() {
            "cg" => Method::ConjugateGradient,
            "gradient" => Method::GradientFlow,
            other => {
                return Err(ConfigError::Validation {
                    field: "method".into(),
                    message: format!("`{other}` is neither cg nor gradient"),
                })
            }
        };
        let cfg = SolveConfig {
            residual_tol: self.residual_tol,
            max_iters: self.max_iters,
            method,
            ..SolveConfig::default()
        };
        cfg.validate().map_err(|e| ConfigError::Validation {
            field: "solver".into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    fn run_config(&self, schedule: Vec<f64>, seed: u64, out: PathBuf, workers: usize) -> Result<RunConfig, ConfigError> {
        let grid = self.grid()?;
        Ok(RunConfig {
            grid,
            potential: PotentialKind::Ring {
                radius: self.potential()?.ring_radius().unwrap_or(0.0),
            },
            solver: self.solver()?,
            schedule: Schedule::Values(schedule),
            profile: ProfileConfig::default(),
            probe: ProbeConfig::for_grid(&grid),
            seed,
            output_dir: out,
            workers,
        })
    }
}

fn output_dir(flag: Option<PathBuf>, fallback: &str) -> PathBuf {
    std::env::var_os(config::OUTPUT_DIR_ENV)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
        .or(flag)
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn parse_schedule(arg: &str) -> Result<Vec<f64>, ConfigError> {
    let text = if Path::new(arg).is_file() {
        fs::read_to_string(arg).map_err(|e| ConfigError::Validation {
            field: "schedule".into(),
            message: e.to_string(),
        })?
    } else {
        arg.to_string()
    };
    let mut values = vec![];
    for (k, line) in text.lines().enumerate() {
        for item in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
                continue;
            }
            values.push(item.parse::<f64>().map_err(|_| ConfigError::Parse {
                line: k + 1,
                message: format!("`{item}` is not a number"),
            })?);
        }
    }
    if values.is_empty() || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::Validation {
            field: "schedule".into(),
            message: "must be a non-empty, strictly increasing list".into(),
        });
    }
    Ok(values)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let workers = cli.workers;
    par::with_workers(workers, move || dispatch(cli.command, workers))
}

fn dispatch(command: Command, workers: usize) -> Result<(), PipelineError> {
    match command {
        Command::QProfile { r_max, step, tol, out } => {
            let profile = townes::shoot_q(r_max, step, tol)?;
            if let Some(dir) = out.map(|o| output_dir(Some(o), "")) {
                fs::create_dir_all(&dir)?;
                pipeline::write_profile(&dir, &profile)?;
            }
            println!("{}", serde_json::to_string_pretty(&pipeline::ProfileSummary::of(&profile))?);
        }
        Command::Eig { setup, out } => {
            let grid = setup.grid()?;
            let v = tabulate(&setup.potential()?, &grid);
            let (mu, phi) = solver::first_eigenpair(&v, &grid, &setup.solver()?)?;
            let summary = serde_json::json!({
                "mu1": mu,
                "asymmetry": asymptotics::asymmetry(&phi),
                "n": grid.n,
                "box": grid.box_length,
                "ring_radius": setup.ring_radius,
            });
            if let Some(dir) = out.map(|o| output_dir(Some(o), "")) {
                fs::create_dir_all(&dir)?;
                dump::write_atomic(&dir.join("eig.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
                dump::write_field(&dir.join("eig.gpf"), &phi)?;
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::GroundState {
            a,
            setup,
            init,
            seed,
            out,
        } => {
            let grid = setup.grid()?;
            let cfg = setup.solver()?;
            let v = tabulate(&setup.potential()?, &grid);
            let start = match init {
                Some(p) => {
                    let u = pipeline::load_init(&p)?;
                    if u.grid != grid {
                        return Err(ConfigError::Validation {
                            field: "init".into(),
                            message: format!("dump grid {:?} differs from --n/--box", u.grid),
                        }
                        .into());
                    }
                    u
                }
                None => {
                    let phi = solver::first_eigenpair(&v, &grid, &cfg)?.1;
                    solver::seeded_perturbation(&phi, &v, cfg.perturb_amplitude, seed)?
                }
            };
            let gs = solver::minimize(&v, a, &start, &cfg)?;
            let dir = output_dir(out, "gpring-out");
            fs::create_dir_all(&dir)?;
            dump::write_atomic(&dir.join("ground_state.json"), serde_json::to_string_pretty(&gs)?.as_bytes())?;
            dump::write_field(&dir.join("ground_state.gpf"), &gs.field)?;
            dump::write_atomic(&dir.join("ground_state_slice.csv"), dump::slice_csv(&gs.field).as_bytes())?;
            println!("{}", serde_json::to_string_pretty(&gs)?);
        }
        Command::Sweep {
            schedule,
            setup,
            seed,
            out,
        } => {
            let values = parse_schedule(&schedule)?;
            let dir = output_dir(out, "gpring-out");
            let rc = setup.run_config(values.clone(), seed, dir.clone(), workers)?;
            fs::create_dir_all(&dir)?;
            dump::write_atomic(&dir.join("config.txt"), config::emit(&rc).as_bytes())?;
            let profile = pipeline::shoot(&rc)?;
            pipeline::write_profile(&dir, &profile)?;
            let v = tabulate(&rc.potential_spec(), &rc.grid);
            let mut failed = None;
            let states = solver::continuation_sweep_with(&v, &rc.grid, &values, &rc.solver, seed, |k, gs| {
                if failed.is_none() {
                    failed = pipeline::write_state(&dir, k, gs).err();
                }
            });
            if let Some(e) = failed {
                return Err(e);
            }
            let states = states?;
            let ring = setup.ring_radius;
            let records = states
                .iter()
                .filter(|s| s.a < profile.a_star())
                .map(|s| asymptotics::sweep_record(s, &profile, ring))
                .collect::<Result<Vec<_>, _>>()?;
            dump::write_atomic(&dir.join("records.csv"), &pipeline::records_csv(&records)?)?;
            println!("{}", serde_json::to_string_pretty(&records)?);
        }
        Command::Analyze { sweep } => {
            let report = pipeline::analyze_dir(&sweep)?;
            println!("{}", serde_json::to_string_pretty(&report.checks)?);
        }
        Command::GnTest {
            n,
            box_length,
            count,
            seed,
        } => {
            let grid = Grid2D::new(n, box_length).map_err(|e| ConfigError::Validation {
                field: "n".into(),
                message: e.to_string(),
            })?;
            let profile = townes::shoot_q(40.0, 1e-3, 1e-13)?;
            let survey = gn::survey(&profile, grid, count, seed)?;
            println!("{}", serde_json::to_string_pretty(&survey)?);
        }
        Command::Run { config: path } => {
            let text = fs::read_to_string(&path)?;
            let mut cfg = config::parse_config(&text)?.with_env_overrides();
            if workers != 0 {
                cfg.workers = workers;
            }
            let outcome = pipeline::run_pipeline(&cfg)?;
            let failed: Vec<&str> = outcome
                .report
                .checks
                .iter()
                .filter(|c| c.passed == Some(false))
                .map(|c| c.name.as_str())
                .collect();
            eprintln!(
                "wrote {} ({} checks failed: {:?})",
                outcome.output_dir.display(),
                failed.len(),
                failed
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.stage());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
