//! Command-line entry point for the synthetic tabular data pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use syntab_cli::{
    cmd_all, cmd_evaluate, cmd_generate, cmd_profile, load_config, CliError, Overrides, RunConfig,
    EXIT_CONFIG, EXIT_EVAL, EXIT_OK,
};

#[derive(Parser)]
#[command(
    name = "syntab",
    version,
    about = "Profile a clinical table, drive record generation, and audit the output"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize the real table into non-identifying aggregates.
    Profile(CommonArgs),
    /// Run every configured (backend, tier) pair and store artifacts.
    Generate(CommonArgs),
    /// Score stored runs and write report.json, report.md, and scores.csv.
    Evaluate(CommonArgs),
    /// Profile, generate, and evaluate in one invocation.
    All(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for generation runs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override, resolved against the config file.
    #[arg(long)]
    out: Option<String>,
    /// Restrict to this backend name; repeatable.
    #[arg(long = "backend")]
    backends: Vec<String>,
    /// Restrict to this tier name; repeatable.
    #[arg(long = "tier")]
    tiers: Vec<String>,
    /// Records to request per run.
    #[arg(long)]
    k: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            jobs: self.jobs,
            seed: self.seed,
            out: self.out.clone(),
            k: self.k,
            backends: self.backends.clone(),
            tiers: self.tiers.clone(),
        }
    }

    fn config(&self) -> Result<RunConfig, CliError> {
        load_config(&self.config, &self.overrides())
    }
}

fn error_code(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
        CliError::Evaluation(_) => EXIT_EVAL,
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Profile(args) => {
            let cfg = args.config()?;
            let path = cmd_profile(&cfg)?;
            println!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Generate(args) => {
            let cfg = args.config()?;
            let outcome = cmd_generate(&cfg)?;
            for run_id in &outcome.completed {
                println!("completed {run_id}");
            }
            for (run_id, reason) in &outcome.failed {
                eprintln!("failed {run_id}: {reason}");
            }
            Ok(outcome.exit_code())
        }
        Command::Evaluate(args) => {
            let cfg = args.config()?;
            let outcome = cmd_evaluate(&cfg)?;
            for (run_id, reason) in &outcome.skipped {
                eprintln!("skipped {run_id}: {reason}");
            }
            println!(
                "evaluated {} run(s); wrote {}",
                outcome.evaluated,
                outcome.report_path.display()
            );
            Ok(EXIT_OK)
        }
        Command::All(args) => {
            let cfg = args.config()?;
            let outcome = cmd_all(&cfg)?;
            for (run_id, reason) in &outcome.generate.failed {
                eprintln!("failed {run_id}: {reason}");
            }
            for (run_id, reason) in &outcome.evaluate.skipped {
                eprintln!("skipped {run_id}: {reason}");
            }
            println!(
                "evaluated {} run(s); wrote {}",
                outcome.evaluate.evaluated,
                outcome.evaluate.report_path.display()
            );
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_code(&err) as u8)
        }
    }
}
