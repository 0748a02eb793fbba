//! Thin CLI over [`mosersys::runner::run`].
//!
//! `mosersys run --config <path> [--out <dir>] [--verbose]` executes one
//! configured run and exits 0 (all certificates pass), 2 (invalid request),
//! 3 (solver non-convergence), or 4 (a certificate failed).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mosersys::config::RunConfig;
use mosersys::runner::{self, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "mosersys", about = "certified ground states for exponentially coupled systems", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured run and write its artifacts.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print stage timings and per-certificate results to stderr.
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out,
        verbose,
    } = cli.command;

    let cfg = match RunConfig::load(&config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("mosersys: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    match runner::run(&cfg, out.as_deref(), verbose) {
        Ok(outcome) => {
            let passed = outcome
                .manifest
                .certificates
                .values()
                .filter(|ok| **ok)
                .count();
            let total = outcome.manifest.certificates.len();
            println!(
                "{}: {passed}/{total} certificates passed",
                outcome.manifest.regime
            );
            if verbose || !outcome.manifest.all_pass {
                for (name, ok) in &outcome.manifest.certificates {
                    println!("  [{}] {name}", if *ok { "pass" } else { "FAIL" });
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("mosersys: {e}");
            ExitCode::from(runner::exit_class(&e) as u8)
        }
    }
}
