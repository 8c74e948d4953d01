mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{LabArgs, OracleArgs, VerifyArgs};
use config::{CommonArgs, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fbconvex", version, about = "Exterior free boundary problem with perimeter penalty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the free boundary functional by level-set descent.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Optimal radius for a ball core, with the energy sweep.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Radius of the ball core.
        #[arg(long)]
        a: Option<f64>,
        /// Space dimension.
        #[arg(long)]
        dim: Option<u32>,
    },
    /// Matrix and hull-curvature checks.
    Lab {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "matrix-trials")]
        matrix_trials: Option<usize>,
    },
    /// Run a named suite or a suite file.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Builtin suite name (main, convexity, inclusion, lemmas, lab, full)
        /// or a TOML suite file.
        #[arg(long)]
        suite: Option<String>,
        /// Override one tolerance, `name=value`; repeatable.
        #[arg(long = "set-tol")]
        set_tol: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Solve { common } => ("solve", common),
        Command::Oracle { common, .. } => ("oracle", common),
        Command::Lab { common, .. } => ("lab", common),
        Command::Verify { common, .. } => ("verify", common),
    };
    let (cfg, file) = RunConfig::resolve(name, common)?;
    if let Some(threads) = cfg.pool_size() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("`threads`: {e}")))?;
    }
    match cli.command {
        Command::Solve { .. } => commands::solve(&cfg, &file),
        Command::Oracle { a, dim, .. } => commands::oracle(&cfg, &file, &OracleArgs { a, dim }),
        Command::Lab { matrix_trials, .. } => commands::lab(&cfg, &file, &LabArgs { matrix_trials }),
        Command::Verify { suite, set_tol, .. } => commands::verify(&cfg, &file, &VerifyArgs { suite, set_tol }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
