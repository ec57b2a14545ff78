//! `rwce`: run configured random-walk experiments and reproduce the
//! shipped checks.
//!
//! Exit codes: 0 success, 2 invalid config, 3 runtime failure (including a
//! failed reproduce suite), 4 bound violation from `check-bound`.

mod config;
mod error;
mod ops;
mod output;
mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rwce::env::catalog;
use rwce::mc::{shipped_scenarios, Harness};
use serde::Serialize;

use config::{load_config, ExperimentConfig, Operation};
use error::CliError;

#[derive(Parser)]
#[command(name = "rwce", version, about = "Random walks in changing environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Args)]
struct ExecArgs {
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "RWCE_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Record seeded trajectories.
    Simulate(RunArgs),
    /// Recurrence profile, optionally with a hitting-probability estimate.
    Classify(RunArgs),
    /// Monte Carlo check of a theorem bound.
    CheckBound(RunArgs),
    /// Drift of the monotone adaptive walk against its coupled simple random walk.
    MawDrift(RunArgs),
    /// Tan-point counts of simple random walk paths.
    Tanpoints(RunArgs),
    /// Harmonicity and drift monitor of a potential sequence along walks.
    MonitorPotential(RunArgs),
    /// List the environment catalog and shipped scenarios.
    Catalog {
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a shipped suite end to end with pinned seeds.
    Reproduce {
        #[arg(value_enum)]
        suite: suites::Suite,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Print the JSON schema of experiment configs.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rwce: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let (op, args) = match command {
        Command::Simulate(a) => (Operation::Simulate, a),
        Command::Classify(a) => (Operation::Classify, a),
        Command::CheckBound(a) => (Operation::CheckBound, a),
        Command::MawDrift(a) => (Operation::MawDrift, a),
        Command::Tanpoints(a) => (Operation::Tanpoints, a),
        Command::MonitorPotential(a) => (Operation::MonitorPotential, a),
        Command::Catalog { json } => return list_catalog(json),
        Command::Reproduce { suite, exec } => return reproduce(suite, &exec),
        Command::Schema => {
            let schema = schemars::schema_for!(ExperimentConfig);
            println!("{}", serde_json::to_string_pretty(&schema).expect("schema serializes"));
            return Ok(());
        }
    };
    let mut cfg = load_config(&args.config)?;
    if let Some(named) = cfg.operation {
        if named != op {
            return Err(CliError::Config(format!(
                "config names operation `{}` but `{}` was requested",
                named.as_str(),
                op.as_str()
            )));
        }
    }
    cfg.operation = Some(op);
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let dir = args
        .exec
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("rwce-out"));
    cfg.output_dir = Some(dir.clone());
    let started = Instant::now();
    let harness = Harness::new(args.exec.workers);
    let mut out = output::Outputs::create(&dir)?;
    let deferred = ops::execute(op, &cfg, &harness, &mut out)?;
    let echo = serde_json::to_value(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    output::finish(out, op.as_str(), echo, harness.workers(), started)?;
    report_dir(&dir);
    deferred.map_or(Ok(()), Err)
}

fn report_dir(dir: &Path) {
    println!("outputs in {}", dir.display());
}

fn reproduce(suite: suites::Suite, exec: &ExecArgs) -> Result<(), CliError> {
    let dir = exec
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("rwce-reproduce-{}", suite.as_str())));
    let started = Instant::now();
    let harness = Harness::new(exec.workers);
    let mut out = output::Outputs::create(&dir)?;
    let deferred = suites::reproduce(suite, &harness, &mut out)?;
    let echo = serde_json::json!({ "suite": suite.as_str() });
    output::finish(out, &format!("reproduce {}", suite.as_str()), echo, harness.workers(), started)?;
    report_dir(&dir);
    deferred.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct ScenarioListing {
    name: String,
    theorem: String,
    environment: rwce::EnvironmentSpec,
    topology: rwce::TopologySpec,
    start: rwce::Vertex,
    level: u32,
    trials: u64,
    master_seed: u64,
}

fn list_catalog(json: bool) -> Result<(), CliError> {
    let entries = catalog();
    let scenarios: Vec<ScenarioListing> = shipped_scenarios()
        .into_iter()
        .map(|s| ScenarioListing {
            name: s.name,
            theorem: s.theorem.to_string(),
            environment: s.env,
            topology: s.topology,
            start: s.start,
            level: s.level,
            trials: s.trials,
            master_seed: s.master_seed,
        })
        .collect();
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    if json {
        let v = serde_json::json!({ "environments": entries, "scenarios": scenarios });
        writeln!(w, "{}", serde_json::to_string_pretty(&v).expect("catalog serializes")).map_err(io)?;
        return Ok(());
    }
    writeln!(w, "environments ({}):", entries.len()).map_err(io)?;
    for e in &entries {
        writeln!(
            w,
            "  {:<16} {:<12} bounds {:<22} adaptive={:<5} proper={:<5} topologies: {}",
            e.name,
            format!("{:?}", e.monotonicity).to_lowercase(),
            e.bounds,
            e.adaptive,
            e.proper,
            e.topologies
        )
        .map_err(io)?;
        let params = if e.parameters.is_empty() { "none" } else { e.parameters };
        writeln!(w, "    parameters: {params}; {}", e.origin).map_err(io)?;
    }
    writeln!(w, "scenarios ({}):", scenarios.len()).map_err(io)?;
    for s in &scenarios {
        writeln!(
            w,
            "  {:<30} {:<10} env {} start {} level {}",
            s.name,
            s.theorem,
            s.environment.name(),
            s.start,
            s.level
        )
        .map_err(io)?;
    }
    Ok(())
}
