//! Command-line front end: configuration loading, thread setup, the
//! subcommands and their exit codes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (a
//! diagnostic JSON is written next to the report), 4 failed check.

mod commands;
mod config;
mod io;

pub use commands::{build_instance, load_field, Completed, ManufacturedError};
pub use config::{
    parse_json, read_json, FieldFile, Forcing, InstanceFile, LayerMode, LinearConfig, RunConfig, ShearConfig,
};
pub use io::{write_csv, write_json, OutTarget, SolutionFile};

use crate::algebra::AlgebraConfig;
use crate::error::{Error, Result};
use crate::nonlinear::Method;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

/// Environment variable overriding `--threads`.
pub const THREADS_ENV: &str = "SHEARWAVE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "shearwave",
    version,
    about = "Traveling free-surface waves over an inclined shear layer"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; absent keys take their defaults.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output directory, or the report path when it ends in `.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symbol table `m`, `rho` over the configured lattice.
    Symbols,
    /// `X^s`, `H^s` and `H^-1` norms of a field file.
    Norms {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Round trips of the linear isomorphism and one `L_kappa` solve.
    SolveLinear,
    /// Nonlinear solve of an instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        method: Option<Method>,
    },
    /// Trilinear-functional and product-bound experiments.
    VerifyAlgebra {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Small- and large-frequency behavior of the symbol `m`.
    VerifyAsymptotics,
    /// Residual of the steady shear flow and the cubic flux identity.
    ShearCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Symbols => "symbols",
            Command::Norms { .. } => "norms",
            Command::SolveLinear => "solve-linear",
            Command::Solve { .. } => "solve",
            Command::VerifyAlgebra { .. } => "verify-algebra",
            Command::VerifyAsymptotics => "verify-asymptotics",
            Command::ShearCheck => "shear-check",
        }
    }
}

/// Exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidDomain(_)
        | Error::Shape(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::Csv(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidDomain(_) => "invalid_domain",
        Error::Shape(_) => "shape",
        Error::Singular { .. } => "singular",
        Error::RhoVanishes { .. } => "rho_vanishes",
        Error::Resolution { .. } => "resolution",
        Error::Incompatible(_) => "incompatible",
        Error::NonContraction(_) => "non_contraction",
        Error::Amplitude(_) => "amplitude",
        Error::Config(_) => "config",
        Error::Empty(_) => "empty",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    command: &'a str,
    error: &'a str,
    message: String,
    config: &'a RunConfig,
}

/// Thread count: the environment variable wins over the flag, which wins
/// over the config file.
pub fn resolve_threads(flag: Option<usize>, config: usize) -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a nonnegative integer, got '{v}'"))),
        Err(std::env::VarError::NotPresent) => Ok(flag.unwrap_or(config)),
        Err(e) => Err(Error::Config(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Config with the file and flag overrides applied.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.global.spec {
        Some(p) => read_json::<RunConfig>(p, "config")?,
        None => RunConfig::default(),
    };
    let g = &cli.global;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = g.tol {
        cfg.tol = tol;
    }
    cfg.threads = resolve_threads(g.threads, cfg.threads)?;
    match &cli.command {
        Command::Norms { s: Some(s), .. } => cfg.s = *s,
        Command::Solve { method: Some(m), .. } => cfg.method = *m,
        Command::VerifyAlgebra { d, trials } => {
            if let Some(d) = *d {
                if d != cfg.algebra.d {
                    if cfg.algebra == AlgebraConfig::for_dim(cfg.algebra.d) {
                        cfg.algebra = AlgebraConfig::for_dim(d);
                    } else {
                        cfg.algebra.d = d;
                    }
                }
            }
            if let Some(t) = *trials {
                cfg.algebra.trials = t;
                cfg.algebra.product_trials = t;
            }
        }
        _ => {}
    }
    cfg.algebra.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli, cfg: &RunConfig, out: &OutTarget) -> Result<Completed> {
    match &cli.command {
        Command::Symbols => commands::symbols(cfg, out),
        Command::Norms { field, .. } => {
            let file: FieldFile = read_json(field, "field")?;
            commands::norms(cfg, &file, out)
        }
        Command::SolveLinear => commands::solve_linear(cfg, out),
        Command::Solve { instance, .. } => {
            let inst: InstanceFile = read_json(instance, "instance")?;
            commands::solve_instance(cfg, &inst, out)
        }
        Command::VerifyAlgebra { .. } => commands::algebra(cfg, out),
        Command::VerifyAsymptotics => commands::asymptotics(cfg, out),
        Command::ShearCheck => commands::shear_check(cfg, out),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let default_out = PathBuf::from(format!("shearwave-{}", cli.command.name()));
    let out = OutTarget::new(cli.global.out.as_deref().unwrap_or(&default_out));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: threads: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| dispatch(cli, &cfg, &out)) {
        Ok(done) => {
            for c in &done.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{tag} {}: {:.3e} (limit {:.3e})", c.name, c.value, c.limit);
            }
            if done.passed() {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            if code == EXIT_NUMERICAL {
                let diag = Diagnostic {
                    command: cli.command.name(),
                    error: error_kind(&e),
                    message: e.to_string(),
                    config: &cfg,
                };
                if let Ok(text) = serde_json::to_string_pretty(&diag) {
                    eprintln!("{text}");
                }
                if out.ensure().is_ok() {
                    let _ = write_json(&out.artifact("diagnostic.json"), &diag);
                }
            }
            code
        }
    }
}

/// Parses `args` and runs; usage errors exit with the configuration code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
