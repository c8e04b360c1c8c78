use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use cmaes_ds::cascade::CenterStrategy;
use cmaes_ds::harness::{self, Algorithm, ExperimentConfig};
use cmaes_ds::objectives::{registry_listing, Kind};
use cmaes_ds::par::Execution;
use cmaes_ds::selection::{verify_batch, ExactCaps, Method};
use cmaes_ds::Error;

#[derive(Parser)]
#[command(
    name = "cmaes-ds",
    version,
    about = "Diverse solution batches from cascaded CMA-ES runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of functions, algorithms and seeds.
    Run(RunArgs),
    /// Select a batch from a stored trajectory.
    Select(SelectArgs),
    /// Merge the records of a run directory into CSV tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the test functions.
    Functions,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Algorithm ids, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ds")]
    algo: Vec<Algorithm>,
    /// Function ids, comma separated, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    function: Vec<String>,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 10.0)]
    dmin: f64,
    /// First seed; `--runs` consecutive seeds are used.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, default_value = "population-best")]
    center_strategy: CenterStrategy,
    #[arg(long)]
    reorder: bool,
    #[arg(long, default_value = "clearing")]
    method: Method,
    /// Function instance seed.
    #[arg(long, default_value_t = 0)]
    instance: u64,
    /// Keep the tabu region log of cascade runs.
    #[arg(long)]
    region_log: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SelectArgs {
    #[arg(long)]
    traj: PathBuf,
    #[arg(long, default_value = "clearing")]
    method: Method,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    dmin: f64,
    #[arg(long, default_value_t = 10)]
    greedy_steps: usize,
    #[arg(long)]
    node_cap: Option<u64>,
    /// Seconds.
    #[arg(long)]
    time_cap: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_functions(ids: &[String]) -> cmaes_ds::Result<Vec<Kind>> {
    if ids.iter().any(|s| s == "all") {
        return Ok(Kind::ALL.to_vec());
    }
    ids.iter().map(|s| Kind::from_id(s)).collect()
}

fn run(args: RunArgs) -> cmaes_ds::Result<()> {
    let mut config = ExperimentConfig::new(args.dim, args.budget, args.k, args.dmin);
    config.functions = parse_functions(&args.function)?;
    config.algorithms = args.algo;
    config.seeds = (args.seed..args.seed + args.runs).collect();
    config.instance = args.instance;
    config.method = args.method;
    config.center_strategy = args.center_strategy;
    config.reorder_on_convergence = args.reorder;
    config.record_regions = args.region_log;
    config.execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    config.workers = args.workers;
    config.out_dir = Some(args.out.clone());

    let records = harness::run_experiment(&config)?;
    for r in &records {
        match (&r.error, r.mean_loss()) {
            (Some(e), _) => println!("{} {} seed={} error: {e}", r.function, r.algorithm, r.seed),
            (None, Some(mean)) => println!(
                "{} {} seed={} complete={} leader_loss={:.6e} mean_loss={mean:.6e} cpu={:.3}s",
                r.function,
                r.algorithm,
                r.seed,
                r.complete,
                r.leader_loss.unwrap_or(f64::NAN),
                r.cpu_seconds
            ),
            (None, None) => println!("{} {} seed={} no batch", r.function, r.algorithm, r.seed),
        }
    }
    let (files, _) = harness::write_report(&args.out, &args.out.join("report.csv"))?;
    println!("wrote {}", files.records.display());
    Ok(())
}

fn select(args: SelectArgs) -> cmaes_ds::Result<()> {
    if !(args.dmin.is_finite() && args.dmin >= 0.0) {
        return Err(Error::Config(format!(
            "d_min must be finite and non-negative, got {}",
            args.dmin
        )));
    }
    let trajectory = harness::read_trajectory(&args.traj)?;
    let mut caps = ExactCaps::default();
    if let Some(n) = args.node_cap {
        caps.node_cap = n;
    }
    if let Some(t) = args.time_cap {
        caps.time_cap =
            Duration::try_from_secs_f64(t).map_err(|e| Error::Config(format!("time cap: {e}")))?;
    }
    let batch = harness::select(
        args.method,
        &trajectory.points,
        args.k,
        args.dmin,
        args.greedy_steps,
        caps,
    )?;
    let valid = verify_batch(&batch, &trajectory.points, args.dmin);
    harness::write_batch(&args.out, &batch)?;
    println!(
        "{} points (k={}), complete={} proved_optimal={} valid={} objective={}",
        batch.points.len(),
        args.k,
        batch.complete,
        batch.proved_optimal,
        valid,
        batch.objective()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Select(args) => select(args),
        Command::Report { input, out } => {
            harness::write_report(&input, &out).map(|(files, records)| {
                println!(
                    "{} records -> {}, {}, {}",
                    records.len(),
                    files.records.display(),
                    files.normalized.display(),
                    files.curves.display()
                );
            })
        }
        Command::Functions => {
            println!("id,group,formula");
            for line in registry_listing() {
                println!("{line}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Json(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
