use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use repute::gateway::LlmMode;
use repute::pipeline::{cmd_aspects, cmd_collect, cmd_evaluate, cmd_judge, cmd_run, Context, RunOptions, StageOutcome};

#[derive(Parser)]
#[command(name = "repute", version, about = "Collect, extract, judge and score reputation aspects of public figures")]
#[command(group(ArgGroup::new("mode").args(["replay", "record", "live"])))]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "repute.toml")]
    config: PathBuf,
    /// Restrict to one celebrity; repeatable.
    #[arg(long = "profile", global = true)]
    profiles: Vec<String>,
    /// Serve every model call from the fixture file.
    #[arg(long, global = true)]
    replay: bool,
    /// Call the provider for requests missing from the fixture file and save them.
    #[arg(long, global = true)]
    record: bool,
    /// Call the provider for every request.
    #[arg(long, global = true)]
    live: bool,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Search, fetch and segment pages, keeping sentences about each person.
    Collect,
    /// Group mentions into named aspects with aggregated descriptions.
    Aspects,
    /// Judge aspects and people as good or evil.
    Judge,
    /// Score every stage against the reference files and write reports.
    Evaluate,
    /// All of the above, in order.
    Run,
}

fn print(outcome: &StageOutcome) {
    let r = &outcome.record;
    let state = if outcome.reused { "reused" } else { "done" };
    println!("{:<9} {state:<6} {} outputs, {} log entries", r.stage, r.outputs.len(), r.log.len());
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let mode = if cli.replay {
        Some(LlmMode::Replay)
    } else if cli.record {
        Some(LlmMode::Record)
    } else if cli.live {
        Some(LlmMode::Live)
    } else {
        None
    };
    let options = RunOptions { profiles: cli.profiles, mode, output_dir: cli.out };
    let result = Context::load(&cli.config, options).and_then(|ctx| {
        let outcomes = match cli.command {
            Command::Collect => vec![cmd_collect(&ctx)?],
            Command::Aspects => vec![cmd_aspects(&ctx)?],
            Command::Judge => vec![cmd_judge(&ctx)?],
            Command::Evaluate => vec![cmd_evaluate(&ctx)?],
            Command::Run => cmd_run(&ctx)?,
        };
        outcomes.iter().for_each(print);
        println!("outputs in {}", ctx.out.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
