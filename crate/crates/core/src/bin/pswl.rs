use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pswl::cli;

/// Wear-leveling simulator for scaled SSD arrays.
#[derive(Parser)]
#[command(name = "pswl", version)]
struct Args {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every cell of a sweep matrix.
    Sweep {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PSWL_LOG", "warn")).init();
    let code = match Args::parse().cmd {
        Command::Run { config, out, seed } => match cli::cmd_run(&config, &out, seed) {
            Ok(r) => {
                if r.status.is_failure() {
                    eprintln!("run ended with status {:?}", r.status);
                }
                cli::status_exit_code(r.status)
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Sweep { matrix, out, jobs } => match cli::cmd_sweep(&matrix, &out, jobs) {
            Ok(s) => {
                if s.failures() > 0 {
                    eprintln!("{} of {} cells failed, see summary.csv", s.failures(), s.rows.len());
                }
                cli::EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Validate { config } => match cli::cmd_validate(&config) {
            Ok(warnings) => {
                for w in warnings {
                    eprintln!("warning: {w}");
                }
                println!("ok");
                cli::EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
