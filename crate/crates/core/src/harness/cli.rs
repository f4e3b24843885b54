//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::alloc::AllocatorConfig;
use crate::error::{Error, Result};
use crate::lp::SolveSession;

use super::bench::{run_benchmark, write_csv, ScenarioFile};
use super::gen::{generate_problem, TrafficModel, TrafficSpec};
use super::io::{load_problem, save_json, save_problem};
use super::pop::{pop_partition, ClientSplit};

#[derive(Debug, Parser)]
#[command(name = "fairalloc", version, about = "Max-min fair resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one allocator on a problem file.
    Solve(SolveArgs),
    /// Generate a random problem.
    Gen(GenArgs),
    /// Score allocators on a scenario file against an oracle.
    Bench(BenchArgs),
    /// Split a problem into POP partitions.
    Partition(PartitionArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(AllocatorConfig::NAMES))]
    allocator: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long, value_parser = ["exact", "approx"])]
    inner: Option<String>,
    /// θ change below which the adaptive waterfiller stops.
    #[arg(long)]
    theta_tolerance: Option<f64>,
    /// Report JSON; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the adaptive waterfiller's θ trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory receiving every LP in CPLEX LP format.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    edges: usize,
    #[arg(long, value_parser = ["poisson", "uniform", "bimodal", "gravity"])]
    traffic: String,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 4)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, default_value = "exact", value_parser = clap::builder::PossibleValuesParser::new(AllocatorConfig::NAMES))]
    oracle: String,
    /// CSV output; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the rows, errors included, as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    output_dir: PathBuf,
    /// Split demands above this quantile of the volumes.
    #[arg(long, default_value_t = 0.75, conflicts_with = "no_split")]
    split_quantile: f64,
    #[arg(long)]
    no_split: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `argv` and runs the command. Returns 0 on success, 2 on usage
/// errors and 1 on any other failure, with a diagnostic on stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Partition(a) => partition(a),
    };
    match result {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn solve_config(a: &SolveArgs) -> Result<AllocatorConfig> {
    let mut obj = Map::new();
    obj.insert("allocator".into(), Value::from(a.allocator.clone()));
    let iterations_key = match a.allocator.as_str() {
        "swan" | "approx-bins" => "max_iterations",
        _ => "iterations",
    };
    let flags: [(&str, &str, Option<Value>); 8] = [
        ("alpha", "--alpha", a.alpha.map(Value::from)),
        ("u", "--u", a.u.map(Value::from)),
        ("epsilon", "--epsilon", a.epsilon.map(Value::from)),
        ("bins", "--bins", a.bins.map(Value::from)),
        (iterations_key, "--iterations", a.iterations.map(Value::from)),
        ("slack", "--slack", a.slack.map(Value::from)),
        ("inner", "--inner", a.inner.clone().map(Value::from)),
        ("theta_tolerance", "--theta-tolerance", a.theta_tolerance.map(Value::from)),
    ];
    for (key, flag, value) in flags {
        if let Some(v) = value {
            obj.insert(key.into(), v);
            if AllocatorConfig::from_value(Value::Object(obj.clone())).is_err() {
                return Err(Error::Config(format!("{flag} does not apply to allocator `{}`", a.allocator)));
            }
        }
    }
    AllocatorConfig::from_value(Value::Object(obj))
}

fn solve(a: SolveArgs) -> Result<()> {
    let cfg = solve_config(&a)?;
    let problem = load_problem(&a.input)?;
    let session = match &a.dump_lp {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            SolveSession::default().with_dump_dir(dir.clone())
        }
        None => SolveSession::default(),
    };
    let report = cfg.run(&problem, &session)?;
    if let Some(path) = &a.trace {
        let trace = report
            .theta_trace
            .as_ref()
            .ok_or_else(|| Error::Config("--trace needs the adaptive-waterfill allocator".into()))?;
        fs::write(path, trace.to_csv()?).map_err(|e| Error::io(path, e))?;
    }
    match &a.output {
        Some(path) => save_json(path, &report),
        None => {
            print_json(&report)
        }
    }
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("stdout", e)),
        _ => Ok(()),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let model: TrafficModel = a.traffic.parse()?;
    let spec = TrafficSpec { model, scale_factor: a.scale, seed: a.seed };
    let problem = generate_problem(a.nodes, a.edges, spec, a.paths)?;
    match &a.output {
        Some(path) => save_problem(path, &problem),
        None => {
            print_json(&problem)
        }
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    let oracle = AllocatorConfig::from_name(&a.oracle)?;
    let scenarios = ScenarioFile::load(&a.scenarios)?;
    let rows = run_benchmark(&scenarios, &oracle);
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: {} / {}: {}", r.scenario, r.allocator, r.error.as_deref().unwrap_or(""));
    }
    if let Some(path) = &a.json {
        save_json(path, &rows)?;
    }
    match &a.output {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_csv(&rows, file)
        }
        None => write_csv(&rows, std::io::stdout().lock()),
    }
}

fn partition(a: PartitionArgs) -> Result<()> {
    let problem = load_problem(&a.input)?;
    let split = if a.no_split { ClientSplit::None } else { ClientSplit::Quantile(a.split_quantile) };
    let parts = pop_partition(&problem, a.k, split, a.seed)?;
    fs::create_dir_all(&a.output_dir).map_err(|e| Error::io(&a.output_dir, e))?;
    for (i, p) in parts.iter().enumerate() {
        save_problem(a.output_dir.join(format!("partition-{i}.json")), p)?;
    }
    Ok(())
}
