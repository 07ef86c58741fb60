//! stepdial: pipeline and benchmark command-line front end.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 stage failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stepdial_cli::config::{BackendKind, EvalRunConfig, PipelineConfig};
use stepdial_cli::stages::{self, StageContext, StageInputMissing};

#[derive(Parser)]
#[command(
    name = "stepdial",
    about = "Turn instructional-video metadata into task-assistance dialogues and benchmark models on them",
    version
)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker pool size for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Print planned LLM call counts without executing anything.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Override the configured LLM backend.
    #[arg(long, global = true, value_parser = parse_backend)]
    backend: Option<BackendKind>,

    /// Override the configured cassette path.
    #[arg(long, global = true)]
    cassette: Option<PathBuf>,

    /// Override the configured split seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    BackendKind::parse(s).ok_or_else(|| format!("{s:?} is not live, replay, or record"))
}

#[derive(Subcommand)]
enum Command {
    /// Parse the manifest and validate every recording's timeline.
    Ingest,
    /// Build atomic instruction sets (stage 1).
    BuildInstructions,
    /// Generate user-expert conversations (stage 2).
    GenDialogues,
    /// Assign video time spans to steps and turns (stage 3).
    Localize,
    /// Assemble validated sessions into the dataset file plus cut-list.
    Assemble,
    /// Assign the stratified train/val/test split.
    Split,
    /// Compute corpus statistics and emit report tables/figures.
    Stats,
    /// Run every pipeline stage in order.
    Pipeline,
    /// Run the benchmark described by a run manifest.
    Eval {
        /// Benchmark run manifest (TOML).
        #[arg(long)]
        run_manifest: PathBuf,
    },
    /// Rebuild report tables and figures from an eval run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; everything else is a usage
            // error.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(message)) => {
            eprintln!("config error: {message}");
            ExitCode::from(1)
        }
        Err(RunError::Stage(error)) => {
            eprintln!("stage failure: {error:#}");
            ExitCode::from(2)
        }
    }
}

enum RunError {
    Config(String),
    Stage(anyhow::Error),
}

fn run(cli: Cli) -> Result<(), RunError> {
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4));

    match cli.command {
        Command::Eval { ref run_manifest } => {
            let mut run_config =
                EvalRunConfig::load(run_manifest).map_err(|e| RunError::Config(format!("{e:#}")))?;
            if let Some(backend) = cli.backend {
                run_config.backend = backend;
            }
            if let Some(cassette) = cli.cassette.clone() {
                run_config.cassette = Some(cassette);
            }
            stages::cmd_eval(&run_config, jobs, cli.dry_run).map_err(stage_error)
        }
        Command::Report { ref run_dir } => stages::cmd_report(run_dir).map_err(stage_error),
        ref command => {
            let config_path = cli
                .config
                .as_ref()
                .ok_or_else(|| RunError::Config("--config is required for pipeline commands".into()))?;
            let mut config =
                PipelineConfig::load(config_path).map_err(|e| RunError::Config(format!("{e:#}")))?;
            if let Some(backend) = cli.backend {
                config.llm.backend = backend;
            }
            if let Some(cassette) = cli.cassette.clone() {
                config.llm.cassette = Some(cassette);
            }
            let ctx = StageContext::from_config(config, jobs, cli.dry_run).map_err(|e| {
                // A missing replay cassette at client construction is a
                // stage-input problem, not a usage problem.
                if e.downcast_ref::<StageInputMissing>().is_some() {
                    stage_error(e)
                } else {
                    RunError::Config(format!("{e:#}"))
                }
            })?;
            let result = match command {
                Command::Ingest => stages::cmd_ingest(&ctx).map(drop),
                Command::BuildInstructions => stages::cmd_build_instructions(&ctx).map(drop),
                Command::GenDialogues => stages::cmd_gen_dialogues(&ctx).map(drop),
                Command::Localize => stages::cmd_localize(&ctx).map(drop),
                Command::Assemble => stages::cmd_assemble(&ctx).map(drop),
                Command::Split => stages::cmd_split(&ctx, cli.seed).map(drop),
                Command::Stats => stages::cmd_stats(&ctx),
                Command::Pipeline => stages::cmd_pipeline(&ctx, cli.seed),
                Command::Eval { .. } | Command::Report { .. } => unreachable!(),
            };
            result.map_err(stage_error)
        }
    }
}

fn stage_error(error: anyhow::Error) -> RunError {
    RunError::Stage(error)
}
