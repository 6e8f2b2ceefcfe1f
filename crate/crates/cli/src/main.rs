use std::path::PathBuf;
use std::process::ExitCode;

use ceub_cli::commands::{self, CliError};
use ceub_core::gen::GenMode;
use clap::{Parser, Subcommand, ValueEnum};

/// Competitive equilibria with unequal budgets.
#[derive(Parser)]
#[command(name = "ceub", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute prices and budgets supporting a Pareto-optimal allocation.
    Price {
        instance: PathBuf,
        allocation: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute a max-min allocation.
    Maxmin {
        instance: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Use the two-agent or two-item algorithm.
        #[arg(long)]
        fast: bool,
    },
    /// Check an allocation against an equilibrium file.
    Verify {
        instance: PathBuf,
        allocation: PathBuf,
        equilibrium: PathBuf,
    },
    /// Generate an instance and a Pareto-optimal allocation.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        items: usize,
        #[arg(long, value_enum, default_value = "a")]
        mode: Mode,
        /// Output prefix; writes PREFIX.instance.json and PREFIX.allocation.json.
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Weighted-welfare vertex.
    A,
    /// Perturbed max-min allocation.
    B,
}

fn main() -> ExitCode {
    let level = match ceub_cli::log_level(std::env::var("CEUB_LOG").ok().as_deref()) {
        Ok(level) => level,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new().filter_level(level).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result: Result<(), CliError> = match cli.command {
        Command::Price {
            instance,
            allocation,
            out,
        } => commands::price(&instance, &allocation, &out, &mut stdout),
        Command::Maxmin {
            instance,
            out,
            fast,
        } => commands::maxmin(&instance, &out, fast, &mut stdout),
        Command::Verify {
            instance,
            allocation,
            equilibrium,
        } => commands::verify(&instance, &allocation, &equilibrium, &mut stdout),
        Command::Gen {
            seed,
            agents,
            items,
            mode,
            out,
        } => {
            let mode = match mode {
                Mode::A => GenMode::Welfare,
                Mode::B => GenMode::MaxMinPerturbed,
            };
            commands::gen(seed, agents, items, mode, &out, &mut stdout)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
