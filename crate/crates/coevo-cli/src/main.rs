//! `coevo`: reproducible file-based workflows over the co-evolution toolkit.
//! Exit codes: 0 success, 1 data/runtime error, 2 usage/config error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { exit_code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { exit_code: 1, message: message.into() }
    }

    pub fn usage_from(err: impl std::fmt::Display) -> Self {
        Self::usage(err.to_string())
    }

    pub fn data_from(err: impl std::fmt::Display) -> Self {
        Self::data(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "coevo",
    version,
    about = "Proposer/critic co-evolution toolkit: simulation, rewards, metrics, aggregation, rendering"
)]
struct Cli {
    /// Key=value config file; keys mirror the library config fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Inline config override, repeatable (applied after the config file).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Master seed override; all randomness flows from this value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory for all output artifacts.
    #[arg(long, default_value = ".", global = true)]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the co-evolution loop; writes training_log.csv, policy.json,
    /// eval_tasks.jsonl and eval_preds.jsonl.
    Simulate,
    /// Score predictions against tasks; writes eval_report.csv.
    Eval {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        preds: PathBuf,
        /// Candidates considered per task (defaults to the eval_k config key).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Collapse repeated runs per task to one consensus point; writes
    /// aggregate.jsonl.
    Aggregate {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// mean, coord_median, geo_median or medoid (defaults to the
        /// strategy config key).
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Emit the full reward breakdown per input line; writes rewards.jsonl.
    Reward {
        #[arg(long)]
        input: PathBuf,
    },
    /// Screen tasks by geometry and optional rollout outcomes; writes
    /// kept.jsonl and rejected.jsonl.
    Filter {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
    /// Rasterize candidate markers over tasks; writes <task_id>.ppm and
    /// <task_id>.markers.json per candidate record.
    Render {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Filter rollout groups and report advantages and objectives; writes
    /// grpo_report.jsonl.
    GrpoCheck {
        #[arg(long)]
        groups: PathBuf,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_file(&text)?
        }
        None => RunConfig::default(),
    };
    for entry in &cli.sets {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {entry:?}")))?;
        cfg.apply(key.trim(), value.trim()).map_err(CliError::usage)?;
    }
    if let Some(seed) = cli.seed {
        cfg.coevo.master_seed = seed;
    }
    cfg.validated()
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))?;
    }
    let cfg = build_config(cli)?;
    let out_dir = cli.out_dir.as_path();
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, out_dir),
        Command::Eval { tasks, preds, k } => commands::cmd_eval(&cfg, tasks, preds, *k, out_dir),
        Command::Aggregate { runs, tasks, strategy } => {
            commands::cmd_aggregate(&cfg, runs, tasks, strategy.as_deref(), out_dir)
        }
        Command::Reward { input } => commands::cmd_reward(&cfg, input, out_dir),
        Command::Filter { tasks, outcomes } => {
            commands::cmd_filter(&cfg, tasks, outcomes.as_deref(), out_dir)
        }
        Command::Render { tasks, candidates } => {
            commands::cmd_render(&cfg, tasks, candidates, out_dir)
        }
        Command::GrpoCheck { groups } => commands::cmd_grpo_check(&cfg, groups, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.exit_code)
        }
    }
}
