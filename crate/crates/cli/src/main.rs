//! `erw`: simulate, tabulate exact moments, classify regimes and run the
//! verification suite for the decaying-step elephant random walk.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{CheckpointSpec, Command, Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("verification failed for criteria {0:?}")]
    VerificationFailed(Vec<u32>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::VerificationFailed(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "erw", version, about = "Elephant random walk with decaying step lengths")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monte Carlo ensemble statistics at each checkpoint
    Simulate(Flags),
    /// Exact moments of T_n and S_n at each checkpoint
    Moments(Flags),
    /// Regime of one (alpha, gamma) point, or of the whole grid with --sweep
    Phase(Flags),
    /// Run the verification criteria and print a JSON report
    Verify(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat key=value file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Number of steps
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated steps, or geom:COUNT for COUNT geometric points from 100 to n
    #[arg(long)]
    checkpoints: Option<CheckpointSpec>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// verify: run only the fast deterministic criteria
    #[arg(long)]
    quick: bool,
    /// moments: accuracy of the limit of E[S_n]
    #[arg(long)]
    tol: Option<f64>,
    /// moments: fail unless the limit of E[S_n] exists
    #[arg(long)]
    limit: bool,
    /// phase: classify the whole grid
    #[arg(long)]
    sweep: bool,
    /// phase: distance within which a point counts as lying on a curve
    #[arg(long)]
    eps: Option<f64>,
    /// Write the fully resolved configuration (including a drawn seed) here
    #[arg(long)]
    save_config: Option<PathBuf>,
}

fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(command);
    if let Some(path) = &flags.config {
        cfg.apply_file(path)?;
        cfg.command = command;
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = &flags.$field {
                cfg.$field = v.clone();
            }
        )*};
    }
    take!(alpha, beta, gamma, n, trials, checkpoints, format, tol);
    macro_rules! take_opt {
        ($($field:ident),*) => {$(
            if flags.$field.is_some() {
                cfg.$field = flags.$field.clone();
            }
        )*};
    }
    take_opt!(seed, out, threads, eps);
    cfg.quick |= flags.quick;
    cfg.limit |= flags.limit;
    cfg.sweep |= flags.sweep;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, flags) = match &cli.command {
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Moments(f) => (Command::Moments, f),
        Sub::Phase(f) => (Command::Phase, f),
        Sub::Verify(f) => (Command::Verify, f),
    };
    let mut cfg = resolve(command, flags)?;
    if command == Command::Simulate {
        cfg.params()?;
        commands::resolve_seed(&mut cfg);
    }
    if let Some(path) = &flags.save_config {
        std::fs::write(path, cfg.to_text())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = output::open(cfg.out.as_deref())?;
    pool.install(|| match command {
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Moments => commands::moments(&cfg, &mut out),
        Command::Phase => commands::phase(&cfg, &mut out),
        Command::Verify => commands::verify(&cfg, &mut out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
