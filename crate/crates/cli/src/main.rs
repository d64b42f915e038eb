//! `soar-mor`: assemble, reduce, sweep and study the unit-square Helmholtz model.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mor_core::rom::NormTag;
use mor_core::MorError;

use crate::commands::{Context, Outcome};
use crate::config::RunConfig;

const EXIT_CONFIG: u8 = 1;
const EXIT_MODEL: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "soar-mor", version, about = "Second-order Krylov model reduction with consecutive-ROM error estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for wave-number sweeps; defaults to available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Norm used for error quantities: two or sup.
    #[arg(long, global = true)]
    norm: Option<NormTag>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Export M, D, K, B, C in Matrix Market format plus the mesh listing.
    Assemble,
    /// Build a SOAR basis and the projected reduced model.
    Reduce,
    /// Evaluate the full (and optionally reduced) transfer function on a grid.
    Sweep,
    /// Run a checkpointed convergence study of the error estimators.
    Study,
    /// Fit the empirical order of the estimator discrepancies near k0.
    VerifyOrder,
}

fn run(cli: &Cli) -> Result<Outcome, MorError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => return Err(MorError::InvalidConfig("--config <path> is required".into())),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| MorError::io(&out, e))?;
    let ctx = Context {
        config,
        out,
        norm: cli.norm,
    };
    ctx.warn_resolution();
    match cli.command {
        Command::Assemble => commands::assemble(&ctx),
        Command::Reduce => commands::reduce(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Study => commands::study(&ctx),
        Command::VerifyOrder => commands::verify(&ctx),
    }
}

/// Reads the `verbosity` key without failing; full validation happens later.
fn configured_verbosity(path: Option<&PathBuf>) -> Option<String> {
    let text = std::fs::read_to_string(path?).ok()?;
    let value: toml::Value = toml::from_str(&text).ok()?;
    value.get("verbosity")?.as_str().map(str::to_owned)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = configured_verbosity(cli.config.as_ref()).unwrap_or_else(|| "warn".into());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::PropertyFailure(failures)) => {
            eprintln!("{} property check(s) failed", failures.len());
            ExitCode::from(EXIT_PROPERTY)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_model_error() { EXIT_MODEL } else { EXIT_CONFIG })
        }
    }
}
