//! `kadapt`: adaptive meshfree quadrature and differentiation experiments.
//!
//! Exit codes: 0 on success (a node-cap stop is a success), 1 on I/O
//! failures, 2 on configuration errors, 3 when a local system is singular.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use kadapt::baselines::adaptive_trapezoid;
use kadapt::io::{sweep_table, timing_table, write_report, write_trapezoid, SweepRow};
use kadapt::timing::time_case;
use kadapt::{run_adaptive, Error, Point, Task};

use config::{make_field, parse_list, Field, RunArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_)
                | Error::CountOverflow { .. }
                | Error::DegreeTooLarge(_)
                | Error::InsufficientNodes { .. }
                | Error::Fixture(_) => 2,
                Error::SingularSystem { .. } | Error::SingularVandermonde { .. } | Error::DegenerateExtension { .. } => 3,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kadapt", version, about = "Adaptive meshfree quadrature and differentiation with local polyharmonic splines")]
struct Cli {
    /// Output directory; overrides `out_dir` in a config file.
    #[arg(long, global = true, env = "KADAPT_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integral over [-1, 1].
    Quad1d(RunArgs),
    /// Derivative at the nodes of [-1, 1].
    Diff1d(RunArgs),
    /// Integral over [-1, 1]^2.
    Quad2d(RunArgs),
    /// Gradient at the nodes of [-1, 1]^2.
    Diff2d(RunArgs),
    /// Final node counts over an (a, eps) grid and several seeds.
    Sweep(SweepArgs),
    /// Mean solve times for the direct and extended degree-(m + mu) weights.
    BenchTiming(TimingArgs),
    /// Adaptive trapezoid rule on [-1, 1].
    TrapzBaseline(TrapzArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "f2")]
    function: String,
    /// Quadrature or differentiation.
    #[arg(long, default_value = "quad")]
    task: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    mu: usize,
    /// Comma-separated values of a.
    #[arg(long, default_value = "1,10,100,1000")]
    a: String,
    /// Comma-separated tolerances.
    #[arg(long, default_value = "1e-4,1e-5,1e-6,1e-7")]
    eps: String,
    /// Seeds per grid point, counted up from `--seed`.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n_cap: Option<usize>,
}

#[derive(Debug, Args)]
struct TimingArgs {
    #[arg(long, default_value = "2,3")]
    d: String,
    #[arg(long, default_value = "1,2,3,4")]
    m: String,
    #[arg(long, default_value = "1,2,3")]
    mu: String,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TrapzArgs {
    #[arg(long, default_value = "f2")]
    function: String,
    #[arg(long, default_value_t = 100.0)]
    a: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit shift, repeatable.
    #[arg(long = "shift", allow_hyphen_values = true)]
    shifts: Vec<f64>,
}

fn out_dir(cli: &Option<PathBuf>, file: Option<PathBuf>, name: &str) -> PathBuf {
    cli.clone().or(file).unwrap_or_else(|| Path::new("out").join(name))
}

fn adaptive(cli: &Cli, args: &RunArgs, dim: usize, task: Task, name: &str) -> Result<(), CliError> {
    let r = args.resolve(dim, task)?;
    let field = |p: &Point| r.field.eval(p);
    let report = run_adaptive(&field, &r.config, Some(&r.field))?;
    let dir = out_dir(&cli.out_dir, r.out_dir, name);
    write_report(&dir, &report)?;
    println!("function {} a {} seed {}", r.field.name(), r.a, r.seed);
    println!("N {}", report.final_nodes());
    match (report.global_value, report.global_error) {
        (Some(v), Some(e)) => println!("value {v:.16e} error {e:.3e}"),
        (Some(v), None) => println!("value {v:.16e}"),
        _ => {}
    }
    if let Some(ratio) = report.median_estimate_ratio(1e-14) {
        println!("median estimate/actual {ratio:.3}");
    }
    println!("termination {}", report.termination.as_str());
    println!("output {}", dir.display());
    Ok(())
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    let task = match args.task.as_str() {
        "quad" => Task::Quadrature,
        "diff" => Task::Differentiation,
        other => return Err(CliError::Config(format!("unknown task '{other}', expected quad or diff"))),
    };
    let amps: Vec<f64> = parse_list(&args.a)?;
    let tols: Vec<f64> = parse_list(&args.eps)?;
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let mut jobs = Vec::new();
    for &a in &amps {
        for &eps in &tols {
            for s in 0..args.seeds {
                jobs.push((a, eps, args.seed + s));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(a, eps, seed)| {
            let f = make_field(&args.function, a, args.dim, None, seed)?;
            let mut cfg = kadapt::AdaptiveConfig::new(args.dim, task, args.m, eps);
            cfg.mu = args.mu;
            if let Some(cap) = args.n_cap {
                cfg.n_cap = cap;
            }
            cfg.validate()?;
            let g = |p: &Point| f.eval(p);
            let report = run_adaptive(&g, &cfg, Some(&f))?;
            Ok(SweepRow { kind: f.name(), a, eps, m: args.m, mu: args.mu, seed, report: (&report).into() })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let dir = out_dir(&cli.out_dir, None, "sweep");
    let path = dir.join("sweep.csv");
    sweep_table(&rows).write(&path)?;
    for &a in &amps {
        let means: Vec<String> = tols
            .iter()
            .map(|&eps| {
                let n: Vec<f64> = rows.iter().filter(|r| r.a == a && r.eps == eps).map(|r| r.report.n as f64).collect();
                format!("{:.1}", n.iter().sum::<f64>() / n.len() as f64)
            })
            .collect();
        println!("a {a}: mean N {}", means.join(" "));
    }
    println!("output {}", path.display());
    Ok(())
}

fn bench_timing(cli: &Cli, args: &TimingArgs) -> Result<(), CliError> {
    let (ds, ms, mus): (Vec<usize>, Vec<usize>, Vec<usize>) = (parse_list(&args.d)?, parse_list(&args.m)?, parse_list(&args.mu)?);
    let mut rows = Vec::new();
    for &d in &ds {
        for &m in &ms {
            for &mu in &mus {
                let row = time_case(d, m, mu, args.reps, args.seed)?;
                println!("d {d} m {m} mu {mu}: tau_full/tau_m {:.3} tau_ext/tau_m {:.3}", row.ratio_full(), row.ratio_ext());
                rows.push(row);
            }
        }
    }
    let path = out_dir(&cli.out_dir, None, "timing").join("timing.csv");
    timing_table(&rows).write(&path)?;
    println!("output {}", path.display());
    Ok(())
}

fn trapz(cli: &Cli, args: &TrapzArgs) -> Result<(), CliError> {
    let shifts = (!args.shifts.is_empty()).then(|| args.shifts.iter().map(|&x| Point::from1(x)).collect());
    let f = make_field(&args.function, args.a, 1, shifts, args.seed)?;
    let Field::Bumps(bumps) = &f else {
        return Err(CliError::Config("trapz-baseline needs f1 or f2".into()));
    };
    let g = |x: f64| bumps.eval(&Point::from1(x));
    let r = adaptive_trapezoid(&g, -1.0, 1.0, args.eps)?;
    let exact = |lo: f64, hi: f64| bumps.cell_integral(&kadapt::Cell::Interval { a: lo, b: hi });
    let dir = out_dir(&cli.out_dir, None, "trapz");
    write_trapezoid(&dir, &r, Some(&exact), bumps.exact_integral().ok())?;
    println!("evaluations {} partition {}", r.evaluations, r.partition_nodes);
    if let Ok(e) = bumps.exact_integral() {
        println!("value {:.16e} error {:.3e}", r.value, (r.value - e).abs());
    }
    println!("output {}", dir.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let workers = match &cli.command {
        // Timings are taken on one thread.
        Command::BenchTiming(_) => Some(1),
        _ => cli.workers,
    };
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Quad1d(a) => adaptive(cli, a, 1, Task::Quadrature, "quad1d"),
        Command::Diff1d(a) => adaptive(cli, a, 1, Task::Differentiation, "diff1d"),
        Command::Quad2d(a) => adaptive(cli, a, 2, Task::Quadrature, "quad2d"),
        Command::Diff2d(a) => adaptive(cli, a, 2, Task::Differentiation, "diff2d"),
        Command::Sweep(a) => sweep(cli, a),
        Command::BenchTiming(a) => bench_timing(cli, a),
        Command::TrapzBaseline(a) => trapz(cli, a),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
