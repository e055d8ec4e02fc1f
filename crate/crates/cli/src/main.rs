//! Batch driver: builds discrete elliptic models, runs the verification
//! suites and λ-sweeps, and writes reports and plot-ready CSV data.

mod commands;
mod config;
mod report;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "dtn-krein",
    version,
    about = "Verify Dirichlet-to-Neumann / Krein resolvent identities on discrete elliptic models"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Path to a `key = value` run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Coefficient preset shorthand (overrides `coeffs.preset`).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Suppress per-check output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the Q-identity / Krein / trace verification suite (report.json).
    Verify,
    /// Tabulate Q(λ) over a λ grid (dtn_sweep.csv).
    DtnSweep,
    /// Stieltjes/Nevanlinna characterization report (characterization.json).
    Characterize,
    /// Coupled (transmission) verification suite (couple_report.json).
    CoupleVerify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut run_config = match &cli.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(config) => config,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        run_config.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        run_config.seed = Some(seed);
    }
    if let Some(preset) = cli.preset {
        run_config.preset = preset;
    }
    if let Err(e) = run_config.validate() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }

    let outcome = match cli.command {
        Cmd::Verify => commands::cmd_verify(&run_config, cli.quiet),
        Cmd::DtnSweep => commands::cmd_dtn_sweep(&run_config, cli.quiet),
        Cmd::Characterize => commands::cmd_characterize(&run_config, cli.quiet),
        Cmd::CoupleVerify => commands::cmd_couple_verify(&run_config, cli.quiet),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            if !cli.quiet {
                eprintln!("one or more checks failed");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
