//! `urdp`: run the reward design loop, benchmark the inner optimizer, and
//! inspect run ledgers.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_bench, cmd_inspect, cmd_run, CliError, InspectQuery};

#[derive(Parser)]
#[command(name = "urdp", version, about = "Uncertainty-aware reward design")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace); RUST_LOG overrides.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the outer reward design loop.
    Run {
        /// Run configuration (.toml or .json).
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory, overriding the config's `output_dir`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare EI and uEI inner loops on synthetic tasks.
    Bench {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print parts of a run ledger.
    Inspect(InspectArgs),
}

#[derive(Args)]
#[group(multiple = false)]
struct InspectQueryArgs {
    /// One line per outer iteration.
    #[arg(long)]
    iterations: bool,
    /// Similarity groups of iteration N.
    #[arg(long, value_name = "N")]
    groups: Option<usize>,
    /// Evaluation history of sample K.
    #[arg(long, value_name = "K")]
    sample: Option<usize>,
}

#[derive(Args)]
struct InspectArgs {
    ledger: PathBuf,
    #[command(flatten)]
    query: InspectQueryArgs,
    /// Iteration for `--sample` (latest evaluated when omitted).
    #[arg(long, value_name = "N", requires = "sample")]
    iteration: Option<usize>,
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, output } => cmd_run(&config, output.as_deref()).map(drop),
        Command::Bench { config, output } => cmd_bench(&config, output.as_deref()).map(drop),
        Command::Inspect(a) => {
            let q = match (a.query.iterations, a.query.groups, a.query.sample) {
                (true, _, _) => InspectQuery::Iterations,
                (_, Some(n), _) => InspectQuery::Groups(n),
                (_, _, Some(sample)) => InspectQuery::Sample { sample, iteration: a.iteration },
                _ => InspectQuery::Summary,
            };
            print!("{}", cmd_inspect(&a.ledger, q)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_CONFIG } else { commands::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
