//! Argument parsing and run orchestration for the `cone-mcf` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cone_mcf::compare::barrier_solve;
use cone_mcf::homog::{fit_reports, schedule, sweep, ErrorMetric, SandwichConfig};
use cone_mcf::io;
use cone_mcf::pde::{evolve, AdmissibleInitial, AngleFunction, Scheme, SolverConfig, TimeStepping};
use cone_mcf::profile::{default_eps_schedule, solve_profile, ProfileTolerances};
use cone_mcf::SelfSimilarSolution;

/// Root for output directories when `--out` is not given.
pub const OUT_ENV: &str = "CONE_MCF_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "cone-mcf",
    version,
    about = "Mean curvature flow with a contact angle on a cone"
)]
struct Cli {
    /// Output directory (default: $CONE_MCF_OUT/<command> or ./cone-mcf-out/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the self-similar profile and its eigenvalue P.
    Profile(ProfileArgs),
    /// Evolve a self-similar snapshot under a prescribed angle.
    Evolve(EvolveArgs),
    /// Sandwich sweep over angle periods.
    Homogenize(HomogenizeArgs),
    /// Integrate the stationary barrier.
    Barrier(BarrierArgs),
    /// Print the stage constants of the iterated upper solutions.
    Schedule(ScheduleArgs),
}

fn dim_arg(s: &str) -> Result<usize, String> {
    let n: usize = s
        .parse()
        .map_err(|_| format!("{s:?} is not a positive integer"))?;
    if n < 1 {
        return Err("dimension must be at least 1".into());
    }
    Ok(n)
}

fn slope_arg(s: &str) -> Result<f64, String> {
    let k: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(k > 0.0 && k < 1.0) {
        return Err(format!("slope must be in (0,1), got {k}"));
    }
    Ok(k)
}

fn positive_arg(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(format!("must be positive, got {x}"));
    }
    Ok(x)
}

fn period_arg(s: &str) -> Result<f64, String> {
    let x = positive_arg(s)?;
    if x >= 1.0 {
        return Err(format!("period must be in (0,1), got {x}"));
    }
    Ok(x)
}

/// `k0,ksup,eps` for a sinusoidal angle.
#[derive(Clone, Copy, Debug)]
struct SinSpec {
    k0: f64,
    k_sup: f64,
    period: f64,
}

fn sin_arg(s: &str) -> Result<SinSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected k0,ksup,eps, got {s:?}"));
    }
    Ok(SinSpec {
        k0: slope_arg(parts[0])?,
        k_sup: slope_arg(parts[1])?,
        period: positive_arg(parts[2])?,
    })
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, value_parser = dim_arg)]
    dim: usize,
    #[arg(long, value_parser = slope_arg)]
    slope: f64,
    /// Smallest regularization in the schedule 1e-2 * 2^-j.
    #[arg(long, value_parser = positive_arg, default_value_t = 1e-2 / 1024.0)]
    eps_floor: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Transformed,
    Direct,
}

#[derive(Args, Debug)]
#[group(id = "angle", required = true, multiple = false, args = ["angle_file", "angle_const", "angle_sin"])]
struct AngleArgs {
    /// Tabulated angle: a `# period=EPS` line followed by `u,k` rows.
    #[arg(long)]
    angle_file: Option<PathBuf>,
    /// Constant slope k.
    #[arg(long, value_parser = slope_arg)]
    angle_const: Option<f64>,
    /// Sinusoid `k0,ksup,eps`.
    #[arg(long, value_parser = sin_arg)]
    angle_sin: Option<SinSpec>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long, value_parser = dim_arg)]
    dim: usize,
    #[command(flatten)]
    angle: AngleArgs,
    #[arg(long, value_parser = positive_arg)]
    t_end: f64,
    /// Grid intervals.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Transformed)]
    scheme: SchemeArg,
    /// Fixed time step; adaptive stepping when omitted.
    #[arg(long, value_parser = positive_arg)]
    dt: Option<f64>,
    /// Time shift of the self-similar snapshot used as initial data.
    #[arg(long, value_parser = positive_arg, default_value_t = 1.0)]
    t0: f64,
    /// Number of equally spaced snapshots after t = 0.
    #[arg(long, default_value_t = 10)]
    snapshots: usize,
}

#[derive(Args, Debug)]
struct HomogenizeArgs {
    #[arg(long, value_parser = dim_arg)]
    dim: usize,
    #[arg(long, value_parser = slope_arg)]
    k0: f64,
    #[arg(long, value_parser = slope_arg)]
    ksup: f64,
    #[arg(long, value_delimiter = ',', required = true, value_parser = period_arg)]
    eps_list: Vec<f64>,
    #[arg(long, value_parser = positive_arg)]
    t0: f64,
    #[arg(long, value_parser = positive_arg)]
    s0: f64,
    #[arg(long, value_parser = positive_arg, default_value_t = 200.0)]
    cap: f64,
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

#[derive(Args, Debug)]
struct BarrierArgs {
    #[arg(long, value_parser = dim_arg)]
    dim: usize,
    #[arg(long, value_parser = slope_arg)]
    k0: f64,
    #[arg(long, value_parser = positive_arg)]
    r_star: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Number of stages.
    #[arg(long, default_value_t = 10)]
    stages: u32,
    #[arg(long, value_parser = period_arg)]
    eps: f64,
    /// Eigenvalue P; computed from --dim and --k0 when omitted.
    #[arg(long, value_parser = positive_arg)]
    p: Option<f64>,
    #[arg(long, value_parser = dim_arg, required_unless_present = "p")]
    dim: Option<usize>,
    #[arg(long, value_parser = slope_arg, required_unless_present = "p")]
    k0: Option<f64>,
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub task: Task,
}

#[derive(Debug, Clone)]
pub enum Task {
    Profile {
        dim: usize,
        slope: f64,
        eps_schedule: Vec<f64>,
        tol: ProfileTolerances,
    },
    Evolve {
        dim: usize,
        angle: AngleFunction,
        t0: f64,
        t_end: f64,
        snapshots: usize,
        solver: SolverConfig,
    },
    Homogenize {
        dim: usize,
        k0: f64,
        k_sup: f64,
        eps_list: Vec<f64>,
        t0: f64,
        s0: f64,
        config: SandwichConfig,
    },
    Barrier {
        dim: usize,
        k0: f64,
        r_star: f64,
        samples: usize,
    },
    Schedule {
        stages: u32,
        eps: f64,
        p: Option<f64>,
        dim: Option<usize>,
        k0: Option<f64>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Profile { .. } => "profile",
            Task::Evolve { .. } => "evolve",
            Task::Homogenize { .. } => "homogenize",
            Task::Barrier { .. } => "barrier",
            Task::Schedule { .. } => "schedule",
        }
    }

    /// Every input that affects the results, for the manifest.
    fn inputs(&self) -> Value {
        match self {
            Task::Profile {
                dim,
                slope,
                eps_schedule,
                tol,
            } => {
                json!({ "dim": dim, "slope": slope, "eps_schedule": eps_schedule, "tolerances": tol })
            }
            Task::Evolve {
                dim,
                angle,
                t0,
                t_end,
                snapshots,
                solver,
            } => {
                json!({ "dim": dim, "angle": angle, "t0": t0, "t_end": t_end, "snapshots": snapshots, "solver": solver,
                        "profile_tolerances": ProfileTolerances::default() })
            }
            Task::Homogenize {
                dim,
                k0,
                k_sup,
                eps_list,
                t0,
                s0,
                config,
            } => {
                json!({ "dim": dim, "k0": k0, "k_sup": k_sup, "eps_list": eps_list, "t0": t0, "s0": s0, "config": config })
            }
            Task::Barrier {
                dim,
                k0,
                r_star,
                samples,
            } => json!({ "dim": dim, "k0": k0, "r_star": r_star, "samples": samples }),
            Task::Schedule {
                stages,
                eps,
                p,
                dim,
                k0,
            } => {
                json!({ "stages": stages, "eps": eps, "p": p, "dim": dim, "k0": k0, "profile_tolerances": ProfileTolerances::default() })
            }
        }
    }
}

/// Parses `argv` (including the program name). Errors carry clap's message, which
/// names the offending flag.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let usage = |msg: String| clap::Error::raw(clap::error::ErrorKind::ValueValidation, msg + "\n");
    let task = match cli.command {
        Command::Profile(a) => {
            let eps_schedule: Vec<f64> = (0..60)
                .map(|j| 1e-2 * 0.5f64.powi(j))
                .take_while(|&e| e >= a.eps_floor * (1.0 - 1e-12))
                .collect();
            if eps_schedule.len() < 2 {
                return Err(usage(format!(
                    "--eps-floor {} leaves fewer than two regularizations below 1e-2",
                    a.eps_floor
                )));
            }
            Task::Profile {
                dim: a.dim,
                slope: a.slope,
                eps_schedule,
                tol: ProfileTolerances::default(),
            }
        }
        Command::Evolve(a) => {
            let angle = if let Some(path) = &a.angle.angle_file {
                let file = fs::File::open(path)
                    .map_err(|e| usage(format!("--angle-file {}: {e}", path.display())))?;
                io::read_angle_file(std::io::BufReader::new(file))
                    .map_err(|e| usage(format!("--angle-file {}: {e}", path.display())))?
            } else if let Some(k) = a.angle.angle_const {
                AngleFunction::constant(k).map_err(|e| usage(format!("--angle-const: {e}")))?
            } else if let Some(v) = a.angle.angle_sin {
                AngleFunction::sinusoid(v.k0, v.k_sup, v.period)
                    .map_err(|e| usage(format!("--angle-sin: {e}")))?
            } else {
                unreachable!("clap requires one angle flag")
            };
            let stepping = match a.dt {
                Some(dt) => TimeStepping::Fixed { dt },
                None => SolverConfig::default().stepping,
            };
            let scheme = match a.scheme {
                SchemeArg::Transformed => Scheme::Transformed,
                SchemeArg::Direct => Scheme::Direct,
            };
            let solver = SolverConfig {
                grid: a.grid,
                stepping,
                scheme,
                ..SolverConfig::default()
            };
            solver
                .validate()
                .map_err(|e| usage(format!("--grid/--dt: {e}")))?;
            Task::Evolve {
                dim: a.dim,
                angle,
                t0: a.t0,
                t_end: a.t_end,
                snapshots: a.snapshots,
                solver,
            }
        }
        Command::Homogenize(a) => {
            if a.ksup < a.k0 {
                return Err(usage(format!("--ksup {} is below --k0 {}", a.ksup, a.k0)));
            }
            if a.s0 <= a.t0 {
                return Err(usage(format!("--s0 {} must exceed --t0 {}", a.s0, a.t0)));
            }
            let mut sorted = a.eps_list.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(usage("--eps-list has repeated periods".into()));
            }
            let config = SandwichConfig {
                cap: a.cap,
                solver: SolverConfig {
                    grid: a.grid,
                    ..SolverConfig::default()
                },
                ..SandwichConfig::default()
            };
            config
                .solver
                .validate()
                .map_err(|e| usage(format!("--grid: {e}")))?;
            Task::Homogenize {
                dim: a.dim,
                k0: a.k0,
                k_sup: a.ksup,
                eps_list: a.eps_list,
                t0: a.t0,
                s0: a.s0,
                config,
            }
        }
        Command::Barrier(a) => {
            if a.samples < 2 {
                return Err(usage("--samples must be at least 2".into()));
            }
            Task::Barrier {
                dim: a.dim,
                k0: a.k0,
                r_star: a.r_star,
                samples: a.samples,
            }
        }
        Command::Schedule(a) => {
            if a.stages < 1 {
                return Err(usage("--stages must be at least 1".into()));
            }
            Task::Schedule {
                stages: a.stages,
                eps: a.eps,
                p: a.p,
                dim: a.dim,
                k0: a.k0,
            }
        }
    };
    let out = match cli.out {
        Some(dir) => dir,
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("cone-mcf-out"))
            .join(task.name()),
    };
    Ok(RunConfig { out, task })
}

/// Collects every file written for one run so the manifest can list them.
struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> cone_mcf::Result<()>,
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.root.join(name);
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> anyhow::Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)
                .map_err(|e| cone_mcf::Error::Parse(e.to_string()))?;
            buf.push(b'\n');
            Ok(())
        })
    }
}

/// What a run produced: the output directory, the files written and a
/// subcommand-specific summary (also stored in the manifest).
#[derive(Debug)]
pub struct RunSummary {
    pub out: PathBuf,
    pub files: Vec<String>,
    pub results: Value,
}

fn profile_for(dim: usize, k: f64) -> anyhow::Result<cone_mcf::SelfSimilarProfile> {
    solve_profile(
        dim,
        k,
        &default_eps_schedule(),
        &ProfileTolerances::default(),
    )
    .with_context(|| format!("profile for N = {dim}, k = {k}"))
}

pub fn run(config: &RunConfig) -> anyhow::Result<RunSummary> {
    let start = Instant::now();
    let mut dir = RunDir::create(&config.out)?;
    let results = match &config.task {
        Task::Profile {
            dim,
            slope,
            eps_schedule,
            tol,
        } => {
            let prof = solve_profile(*dim, *slope, eps_schedule, tol).context("profile solve")?;
            dir.write("profile.csv", |b| io::write_profile_csv(b, &prof))?;
            let meta = json!({ "N": dim, "k": slope, "P": prof.p, "eps_floor": prof.eps_floor(), "tolerances": tol,
                               "p_extrapolated": prof.p_extrapolated, "extension": prof.extension, "eps_history": prof.eps_history });
            dir.write_json("profile.json", &meta)?;
            json!({ "P": prof.p, "axis_height": prof.axis_height(), "ode_residual_sup": prof.ode_residual_sup() })
        }
        Task::Evolve {
            dim,
            angle,
            t0,
            t_end,
            snapshots,
            solver,
        } => {
            let prof = profile_for(*dim, angle.k0())?;
            let sol = SelfSimilarSolution::new(std::sync::Arc::new(prof), *t0)?;
            let xi0 = sol.radius(0.0);
            let width = angle.period().unwrap_or(xi0).min(0.25 * xi0);
            let initial = AdmissibleInitial::from_self_similar(&sol, angle, width, 2000)?;
            let marks: Vec<f64> = (1..=*snapshots)
                .map(|i| t_end * i as f64 / *snapshots as f64)
                .collect();
            let evo = evolve(&initial, angle, *dim, solver, *t_end, &marks).context("evolution")?;
            dir.write("snapshots.csv", |b| {
                io::write_snapshots_csv(b, &evo.snapshots)
            })?;
            let last = evo.last();
            json!({ "P": sol.p(), "collar_width": width, "initial_samples": 2000, "xi_initial": xi0, "xi_final": last.xi, "stats": evo.stats })
        }
        Task::Homogenize {
            dim,
            k0,
            k_sup,
            eps_list,
            t0,
            s0,
            config,
        } => {
            let reports =
                sweep(*dim, *k0, *k_sup, eps_list, *t0, *s0, config).context("sandwich sweep")?;
            dir.write("sweep.csv", |b| io::write_sweep_csv(b, &reports))?;
            for r in &reports {
                dir.write(&format!("series_eps_{}.csv", r.eps), |b| {
                    io::write_series_csv(b, r)
                })?;
            }
            let fit = |m| match fit_reports(&reports, m) {
                Ok(f) => json!(f),
                Err(e) => json!({ "unavailable": e.to_string() }),
            };
            let runs: Vec<Value> = reports
                .iter()
                .map(|r| json!({ "eps": r.eps, "window": r.window, "capped": r.capped, "initial_gap": r.initial_gap,
                                 "upper_gap_max": r.upper_gap_max, "stats": r.stats }))
                .collect();
            json!({ "P": reports[0].p, "fit_sup": fit(ErrorMetric::Sup), "fit_end": fit(ErrorMetric::End),
                    "theoretical_exponent": 1.0 / 6.0, "runs": runs })
        }
        Task::Barrier {
            dim,
            k0,
            r_star,
            samples,
        } => {
            let b = barrier_solve(*r_star, *k0, *dim, *samples).context("barrier")?;
            dir.write("barrier.csv", |w| io::write_barrier_csv(w, &b))?;
            json!({ "K": b.slope_constant(), "r_min": b.r_min(), "v_r_end": b.v_r.last() })
        }
        Task::Schedule {
            stages,
            eps,
            p,
            dim,
            k0,
        } => {
            let p = match (p, dim, k0) {
                (Some(p), _, _) => *p,
                (None, Some(d), Some(k)) => profile_for(*d, *k)?.p,
                _ => bail!("schedule needs --p or both --dim and --k0"),
            };
            let rows = (1..=*stages)
                .map(|n| schedule(n, *eps, p))
                .collect::<cone_mcf::Result<Vec<_>>>()?;
            dir.write("schedule.csv", |b| io::write_schedule_csv(b, &rows))?;
            json!({ "P": p, "limit_window": p * eps.powf(-4.0 / 3.0), "limit_shift": eps.powf(-0.5) })
        }
    };
    let manifest = json!({
        "command": config.task.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": config.task.inputs(),
        "outputs": dir.files.clone(),
        "results": results,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    dir.write_json("manifest.json", &manifest)?;
    Ok(RunSummary {
        out: config.out.clone(),
        files: dir.files,
        results,
    })
}

/// Full entry point: parse, run, report, and return the exit status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&config) {
        Ok(summary) => {
            println!(
                "{}: wrote {} to {}",
                config.task.name(),
                summary.files.join(", "),
                summary.out.display()
            );
            println!("{}", summary.results);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_SOLVER
        }
    }
}
