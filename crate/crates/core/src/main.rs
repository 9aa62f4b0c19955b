use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use carnot_lab::runner::{self, Mode, RunOptions, EXIT_ERROR};

/// Thread count override for the solver pool.
const THREADS_ENV: &str = "CARNOT_LAB_THREADS";

#[derive(Parser)]
#[command(name = "carnot-lab", version, about = "Parabolic infinity-Laplace laboratory on Carnot groups")]
struct Cli {
    /// Output directory (overrides the config's `output`; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized experiments (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write snapshots.
    Solve { config: PathBuf },
    /// Run the configured experiments and write reports.
    Verify { config: PathBuf },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{value}`");
                return ExitCode::from(EXIT_ERROR as u8);
            }
        }
    }

    let options = RunOptions { out: cli.out, seed: cli.seed, quiet: cli.quiet };
    let code = match cli.command {
        Command::List => {
            print!("{}", runner::list_experiments());
            0
        }
        Command::Solve { config } => runner::run_file(&config, Mode::Solve, &options),
        Command::Verify { config } => runner::run_file(&config, Mode::Verify, &options),
    };
    ExitCode::from(code as u8)
}
