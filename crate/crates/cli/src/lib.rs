//! Command-line driver: `key=value` configuration, sweeps over `k`, and CSV
//! and JSON reports.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig, KEYS};

/// Exit status for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for computation failures outside per-row reporting.
pub const EXIT_COMPUTE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(bubble_forge::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Compute(_) | CliError::Io(_) => EXIT_COMPUTE,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bubble-forge", version, about = "Doubled-equator bubble configurations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Expansion constants in both normalisations.
    Constants(Common),
    /// Exact ring and cross lattice sums against their asymptotics.
    Sums(Common),
    /// Quadrature energy against the reduced functional.
    Energy(Common),
    /// Critical points of the reduced functional.
    Solve(Common),
    /// Weighted norms of the ansatz residual and their decay fit.
    Errnorm(Common),
    /// The acceptance criteria.
    Validate(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, required_unless_present = "list")]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// validate: list criteria; other commands: list config keys.
    #[arg(long)]
    list: bool,
}

fn set_threads(err: &mut dyn Write) -> Result<(), CliError> {
    let Ok(v) = std::env::var("BUBBLE_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError {
        line: None,
        message: format!("BUBBLE_FORGE_THREADS={v:?} is not a positive integer"),
    })?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        let _ = writeln!(err, "worker pool already running; BUBBLE_FORGE_THREADS ignored");
    }
    Ok(())
}

/// Runs the CLI and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.cmd, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let common = match &cmd {
        Cmd::Constants(c) | Cmd::Sums(c) | Cmd::Energy(c) | Cmd::Solve(c) | Cmd::Errnorm(c) | Cmd::Validate(c) => c,
    };
    if common.list {
        if matches!(cmd, Cmd::Validate(_)) {
            return commands::list(out);
        }
        for k in KEYS {
            writeln!(out, "{k}")?;
        }
        return Ok(0);
    }
    set_threads(err)?;
    let path = common.config.as_ref().expect("clap enforces --config without --list");
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    cfg.check_output()?;
    match cmd {
        Cmd::Constants(_) => commands::constants(&cfg, out),
        Cmd::Sums(_) => commands::sums(&cfg, out),
        Cmd::Energy(_) => commands::energy(&cfg, out),
        Cmd::Solve(_) => commands::solve(&cfg, out),
        Cmd::Errnorm(_) => commands::errnorm(&cfg, out),
        Cmd::Validate(_) => commands::validate(&cfg, out, err),
    }
}
