use clap::{Parser, Subcommand};

use qdense_cli::commands::{
    run_baseline_command, run_capacity_command, run_locc1_command, run_sweep_command,
};
use qdense_cli::config::{read_thread_cap, CommonOpts, ExperimentConfig};
use qdense_cli::verify::run_all;
use qdense_cli::CliError;

/// Dense coding with a coherently routed sender: capacity optimization,
/// sweeps and verification.
#[derive(Parser)]
#[command(name = "qdense", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize the global-decoding capacity for a state family.
    Capacity(CommonOpts),
    /// Maximize one-way LOCC extractable information (M = 2).
    Locc1(CommonOpts),
    /// Optimize the routed capacity across a theta grid (gghz family).
    Sweep(CommonOpts),
    /// Closed-form standard dense-coding baseline across a theta grid.
    Baseline(CommonOpts),
    /// Run the verification suite; exit 0 only if every criterion passes.
    Verify(CommonOpts),
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and --version are successful exits.
            if err.use_stderr() {
                eprintln!("{err}");
                return 1;
            }
            print!("{err}");
            return 0;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    qdense_core::capacity::configure_threads(read_thread_cap()?);
    match cli.command {
        Command::Capacity(opts) => {
            let cfg = ExperimentConfig::resolve("capacity", &opts)?;
            run_capacity_command(&cfg)?;
            Ok(0)
        }
        Command::Locc1(opts) => {
            let cfg = ExperimentConfig::resolve("locc1", &opts)?;
            run_locc1_command(&cfg)?;
            Ok(0)
        }
        Command::Sweep(opts) => {
            let cfg = ExperimentConfig::resolve("sweep", &opts)?;
            run_sweep_command(&cfg)?;
            Ok(0)
        }
        Command::Baseline(opts) => {
            let cfg = ExperimentConfig::resolve("baseline", &opts)?;
            run_baseline_command(&cfg)?;
            Ok(0)
        }
        Command::Verify(opts) => {
            let cfg = ExperimentConfig::resolve("verify", &opts)?;
            let outcomes = run_all(cfg.fast);
            for outcome in &outcomes {
                println!("{}", outcome.line());
            }
            let failed: Vec<usize> = outcomes
                .iter()
                .filter(|o| !o.passed && !o.skipped)
                .map(|o| o.id)
                .collect();
            if failed.is_empty() {
                println!("all criteria passed");
                Ok(0)
            } else {
                Err(CliError::acceptance(format!("criteria failed: {failed:?}")))
            }
        }
    }
}
