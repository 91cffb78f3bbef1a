//! `kantorovich`: kernel checks, moment tables, convergence studies and
//! image resampling driven by a TOML config.
//!
//! Exit status: 0 when every check passed, 1 when a check failed, 2 on
//! configuration or input errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "kantorovich",
    version,
    about = "Bivariate Kantorovich sampling operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for CSV and PGM output.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Worker threads for the parallel evaluators.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Seed for the modulus-of-continuity sampler; overrides `study.seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Partition of unity, first moments and second-moment finiteness.
    KernelCheck,
    /// Algebraic and absolute lattice moments.
    Moments,
    /// Sup-norm errors against the rate bound over a grid.
    Converge,
    /// Pointwise asymptotic residuals against their bound.
    Voronovskaja,
    /// Resample a PGM image.
    Resample,
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        bail!("--threads must be positive");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    #[cfg(not(feature = "parallel"))]
    eprintln!("note: built without the parallel feature, --threads {n} ignored");
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome> {
    init_threads(cli.threads)?;
    let Some(path) = &cli.config else {
        bail!("--config <PATH> is required");
    };
    let cfg = RunConfig::load(path)?;
    let outcome = match cli.command {
        Command::KernelCheck => commands::kernel_check(&cfg)?,
        Command::Moments => commands::moments(&cfg)?,
        Command::Converge => commands::converge(&cfg, cli.seed)?,
        Command::Voronovskaja => commands::voronovskaja(&cfg, cli.seed)?,
        Command::Resample => commands::resample(&cfg)?,
    };
    outcome.write(&cli.out)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Some(s) = &outcome.summary {
                print!("{s}");
            }
            if !outcome.checks.is_empty() {
                print!("{}", outcome.check_table());
            }
            for (name, _) in &outcome.files {
                println!("wrote {}", cli.out.join(name).display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                for c in outcome.checks.iter().filter(|c| !c.pass) {
                    eprintln!("failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tol);
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
