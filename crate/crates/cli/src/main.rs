use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vexh_cli::config::{RunConfig, Suite};

#[derive(Parser)]
#[command(name = "vexh", version, about = "Variable exponent Hardy space verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write report.json, CSV tables and summary.txt
    Run {
        /// TOML run configuration
        #[arg(long)]
        config: PathBuf,
        /// Suite to run; overrides the config file
        #[arg(long, value_enum)]
        suite: Option<Suite>,
        /// Corpus seed; overrides the config file
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long, env = "VEXH_OUT")]
        out: Option<PathBuf>,
        /// Worker threads
        #[arg(long)]
        jobs: Option<usize>,
        /// Multiply every grid size by this power of two
        #[arg(long, default_value_t = 1)]
        grid_scale: usize,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

fn prepare(command: &Command) -> Result<(RunConfig, PathBuf)> {
    let Command::Run { config, suite, seed, out, jobs, grid_scale } = command;
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = suite {
        cfg.suite = *s;
    }
    if let Some(s) = seed {
        cfg.seed = *s;
    }
    if let Some(j) = jobs {
        cfg.jobs = Some(*j);
    }
    cfg.scale_grids(*grid_scale)?;
    let out = out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (cfg, out) = prepare(&cli.command).map_err(Failure::Usage)?;
    if let Some(j) = cfg.jobs.filter(|&j| j > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring the worker pool").map_err(Failure::Usage)?;
    }
    let outcome = vexh_cli::execute(&cfg, &out).map_err(Failure::Run)?;
    println!("wrote {} files to {}", outcome.files.len(), out.display());
    if outcome.passed {
        println!("all assertions pass");
    } else {
        eprintln!("{} failing records:", outcome.failures.len());
        for f in &outcome.failures {
            eprintln!("  {f}");
        }
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
