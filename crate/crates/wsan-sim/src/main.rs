//! Command-line front end: single runs, parameter sweeps, and the
//! acceptance suite.
//!
//! Exit codes: 0 success, 1 invalid configuration (or failed verification),
//! 2 simulation non-termination, 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wsan_sim::engine::{self, EngineError, RunMetrics, Simulation};
use wsan_sim::harness::output::{emit_csv, emit_scatter};
use wsan_sim::harness::settings::{Settings, SingleRun};
use wsan_sim::harness::{run_sweep, Algorithm, SweepError};
use wsan_sim::verify;

const EXIT_CONFIG: u8 = 1;
const EXIT_NONTERMINATION: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wsan-sim",
    about = "Sensor/actor network surveillance simulator comparing data suppression protocols",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm + parameter + seed and print the run metrics.
    Run(CommonArgs),
    /// Run a parameter sweep and write CSV and scatter outputs.
    Sweep(CommonArgs),
    /// Run the acceptance suite and print one line per criterion.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file in `key = value` form; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// One of TS-1, STS-1, DAS-1, TS-2, STS-2, DAS-2.
    #[arg(long, value_name = "NAME")]
    algorithm: Option<String>,
    /// Alpha value(s) for STS; comma-separated for sweeps.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_negative_numbers = true)]
    alpha: Option<Vec<f64>>,
    /// Distance gate value(s) for DAS; comma-separated for sweeps.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_negative_numbers = true)]
    ddas: Option<Vec<f64>>,
    /// Number of seeds in a sweep (default 20).
    #[arg(long, value_name = "N")]
    seeds: Option<usize>,
    /// First seed; `run` uses exactly this seed.
    #[arg(long, value_name = "SEED")]
    base_seed: Option<u64>,
    /// Grid dimensions, e.g. 200x200.
    #[arg(long, value_name = "WxH")]
    grid: Option<String>,
    /// Number of actors.
    #[arg(long, value_name = "N")]
    actors: Option<u16>,
    /// Elimination quota ending a run.
    #[arg(long, value_name = "N")]
    quota: Option<u64>,
    /// Output directory for sweep files (default `.`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweep cells (defaults to all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Stream per-event trace lines to stderr (run only).
    #[arg(long)]
    trace: bool,
    /// Step ceiling for the non-termination guard (default 1000000).
    #[arg(long, value_name = "N")]
    ceiling: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Worker threads (defaults to all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's rendering but our exit-code contract: help and
            // version are success, everything else is a config error.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::Verify(args) => verify_command(args),
    }
}

/// Flags-over-file settings resolution shared by `run` and `sweep`.
fn resolve_settings(args: &CommonArgs) -> Result<Settings, Failure> {
    let mut flags = Settings {
        alpha: args.alpha.clone(),
        ddas: args.ddas.clone(),
        seeds: args.seeds,
        base_seed: args.base_seed,
        actors: args.actors,
        quota: args.quota,
        out: args.out.clone(),
        jobs: args.jobs,
        trace: args.trace.then_some(true),
        ceiling: args.ceiling,
        ..Settings::default()
    };
    if let Some(name) = &args.algorithm {
        flags.algorithm = Some(name.parse::<Algorithm>().map_err(Failure::config)?);
    }
    if let Some(grid) = &args.grid {
        flags.grid = Some(parse_grid_flag(grid)?);
    }
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::io(format!("reading {}: {e}", path.display()))
            })?;
            Settings::parse(&text).map_err(Failure::config)?
        }
        None => Settings::default(),
    };
    Ok(flags.or(file))
}

fn parse_grid_flag(value: &str) -> Result<(u16, u16), Failure> {
    let parsed = Settings::parse(&format!("grid = {value}")).map_err(Failure::config)?;
    Ok(parsed.grid.expect("grid key was just set"))
}

fn run_command(args: CommonArgs) -> ExitCode {
    let outcome = resolve_settings(&args)
        .and_then(|s| s.single_run().map_err(Failure::config))
        .and_then(execute_single_run);
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn execute_single_run(setup: SingleRun) -> Result<(), Failure> {
    let policy = setup
        .algorithm
        .policy(setup.param)
        .map_err(Failure::from_sweep)?;
    let cfg = wsan_sim::WorldConfig {
        rng_seed: setup.seed,
        ..setup.world
    };
    let mut sim = Simulation::new(cfg, policy).map_err(Failure::from_engine)?;
    if setup.trace {
        sim.set_trace(Box::new(std::io::stderr()));
    }
    let metrics = sim.run().map_err(Failure::from_engine)?;
    print_metrics(setup.algorithm, setup.param, setup.seed, &metrics);
    Ok(())
}

fn print_metrics(algorithm: Algorithm, param: Option<f64>, seed: u64, m: &RunMetrics) {
    match param {
        Some(p) => println!("algorithm: {algorithm} (param {p})"),
        None => println!("algorithm: {algorithm}"),
    }
    println!("seed: {seed}");
    println!("steps: {}", m.steps_elapsed);
    println!("eliminated: {}", m.eliminated());
    println!("transfers: {}", m.transfers);
    println!("hops: {}", m.hops);
    println!("mean time to capture: {:.6}", m.mean_capture_time());
}

fn sweep_command(args: CommonArgs) -> ExitCode {
    let outcome = resolve_settings(&args).and_then(|s| {
        let spec = s.sweep_spec().map_err(Failure::config)?;
        let out_dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let rows = with_jobs(s.jobs, || run_sweep(&spec)).map_err(Failure::from_sweep)?;
        write_outputs(&rows, &out_dir)?;
        println!(
            "{}: {} parameter setting(s) x {} seed(s); outputs in {}",
            spec.algorithm,
            rows.len(),
            spec.seeds.len(),
            out_dir.display()
        );
        Ok(())
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn write_outputs(rows: &[wsan_sim::harness::AggregateRow], dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::io(format!("creating {}: {e}", dir.display())))?;
    emit_csv(rows, &dir.join("sweep.csv")).map_err(Failure::from_sweep)?;
    emit_scatter(
        rows,
        &dir.join("scatter.csv"),
        Some(&dir.join("scatter.svg")),
    )
    .map_err(Failure::from_sweep)?;
    Ok(())
}

fn verify_command(args: VerifyArgs) -> ExitCode {
    let results = with_jobs(args.jobs, verify::run_all);
    let mut all_passed = true;
    for r in &results {
        println!("{}", r.line());
        all_passed &= r.passed;
    }
    if all_passed {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CONFIG)
    }
}

/// Runs `body` on a bounded rayon pool when requested and available.
#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<usize>, body: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("rayon pool")
            .install(body),
        _ => body(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T>(jobs: Option<usize>, body: impl FnOnce() -> T) -> T {
    if jobs.is_some() {
        eprintln!("note: built without the `parallel` feature; --jobs is ignored");
    }
    body()
}

/// A failed command, already mapped onto the exit-code contract.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }

    fn io(message: String) -> Self {
        Self {
            code: EXIT_IO,
            message,
        }
    }

    fn from_engine(e: EngineError) -> Self {
        let code = match &e {
            EngineError::NonTermination { .. } => EXIT_NONTERMINATION,
            EngineError::Trace(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }

    fn from_sweep(e: SweepError) -> Self {
        let code = match &e {
            SweepError::Run {
                source: EngineError::NonTermination { .. },
                ..
            } => EXIT_NONTERMINATION,
            SweepError::Run { source, .. } => {
                return Self::from_engine_ref(source, e.to_string());
            }
            SweepError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }

    fn from_engine_ref(e: &EngineError, message: String) -> Self {
        let code = match e {
            EngineError::NonTermination { .. } => EXIT_NONTERMINATION,
            EngineError::Trace(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self { code, message }
    }

    fn report(self) -> ExitCode {
        eprintln!("error: {}", self.message);
        ExitCode::from(self.code)
    }
}
