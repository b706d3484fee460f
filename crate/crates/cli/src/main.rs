//! `zerolabel`: runs the data preparation, bootstrap labeling and
//! evaluation stages from a TOML run configuration.
//!
//! Exit codes: 0 success, 1 stage failure, 2 input/IO error,
//! 3 configuration or missing-secret error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "zerolabel", version, about = "Sentiment classification of reviews without manual labels")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, short, global = true, default_value = "zerolabel.toml")]
    config: PathBuf,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for folds and pipelines.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Label with the offline lexicon mock instead of the chat endpoint.
    #[arg(long, global = true)]
    mock: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, filter, trim, standardize and split every dataset.
    Prepare,
    /// Recompute corpus statistics from prepared data.
    Stats,
    /// Produce one bootstrap training set per fold, with transcripts.
    Bootstrap,
    /// Cross-validate the bootstrap pipelines and write reports.
    Evaluate,
    /// Run the gold-label sampled baselines and write reports.
    Baselines,
    /// prepare, bootstrap, evaluate and baselines in sequence.
    FullRun,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prepare => "prepare",
            Command::Stats => "stats",
            Command::Bootstrap => "bootstrap",
            Command::Evaluate => "evaluate",
            Command::Baselines => "baselines",
            Command::FullRun => "full-run",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Config("--jobs must be >= 1".into()));
    }
    let config = LoadedConfig::load(&cli.config)?;
    let out = match cli.output_dir {
        Some(dir) => dir,
        None => config.resolve(&config.config.output_dir),
    };
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.config.seed),
        mock: cli.mock,
        out: out.clone(),
        command: cli.command.name().to_owned(),
        config,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let mut outputs = OutputDir::new(out);
    pool.install(|| match cli.command {
        Command::Prepare => commands::prepare(&ctx, &mut outputs),
        Command::Stats => commands::stats(&ctx, &mut outputs),
        Command::Bootstrap => commands::bootstrap(&ctx, &mut outputs),
        Command::Evaluate => commands::evaluate(&ctx, &mut outputs),
        Command::Baselines => commands::baselines(&ctx, &mut outputs),
        Command::FullRun => commands::full_run(&ctx, &mut outputs),
    })?;
    log::info!("{} file(s) written under {}", outputs.written().len(), outputs.root().display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
