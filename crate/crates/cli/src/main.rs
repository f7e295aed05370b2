//! `chibar` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error,
//! 4 statistical-quality failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(chibar::Error),
    #[error("statistical quality check failed: {0}")]
    Statistical(String),
}

impl From<chibar::Error> for CliError {
    fn from(e: chibar::Error) -> Self {
        match e {
            chibar::Error::InvalidArgument(m) => CliError::Config(m),
            chibar::Error::Domain(m) => CliError::Config(format!("outside model domain: {m}")),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Statistical(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "chibar",
    version,
    about = "Chi-bar-squared process suprema for boundary likelihood-ratio tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chi-bar-squared weights of a model cone or a named cone.
    Weights,
    /// Monte Carlo sample of the supremum statistic and its critical values.
    SimulateSup,
    /// Information, boundary and spectral tables of the pedigree types.
    LinkageTables,
    /// Finite-sample LRT replicates compared with the asymptotic law.
    FiniteSample,
    /// Critical values against grid fineness.
    Refine,
    /// Limiting power along a list of local alternatives.
    Power,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Weights => "weights",
            Command::SimulateSup => "simulate-sup",
            Command::LinkageTables => "linkage-tables",
            Command::FiniteSample => "finite-sample",
            Command::Refine => "refine",
            Command::Power => "power",
        }
    }
}

#[derive(Debug, Args)]
struct Opts {
    /// Registered model (`mix1`, `mix3`, `linkage:sib-pair`, ...).
    #[arg(long, global = true)]
    model: Option<String>,
    /// Named cone for `weights` (`orthant2`, `random-r3`, ...).
    #[arg(long, global = true)]
    cone: Option<String>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replicates.
    #[arg(long, global = true, alias = "mc")]
    reps: Option<usize>,
    /// Grid points per index dimension.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Sample size of finite-sample replicates.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output file (draws for `simulate-sup` and `finite-sample`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to `CHIBAR_THREADS`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print closed-form and Monte Carlo weights side by side.
    #[arg(long, global = true)]
    compare: bool,
    /// Decimal places in summary tables.
    #[arg(long, global = true)]
    digits: Option<usize>,
    /// Table for `linkage-tables`: `information`, `spectral`, `sib-cousin` or `all`.
    #[arg(long, global = true)]
    table: Option<String>,
}

fn default_reps(command: &Command) -> usize {
    match command {
        Command::Weights => 100_000,
        Command::FiniteSample => 2000,
        _ => 10_000,
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.opts.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let o = &cli.opts;
    let env_threads = match std::env::var("CHIBAR_THREADS") {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("CHIBAR_THREADS={s:?}")))?,
        ),
        Err(_) => None,
    };
    let mut grid = file.grid;
    if o.grid_n.is_some() {
        grid.n = o.grid_n;
    }
    let cfg = RunConfig {
        command: cli.command.name().into(),
        model: o.model.clone().or(file.model),
        cone: o.cone.clone().or(file.cone),
        seed: o.seed.or(file.mc.seed).unwrap_or(1),
        reps: o
            .reps
            .or(file.mc.reps)
            .unwrap_or_else(|| default_reps(&cli.command)),
        alpha: o.alpha.or(file.alpha).unwrap_or(0.05),
        n: o.n.or(file.n).unwrap_or(1000),
        compare: o.compare || file.compare.unwrap_or(false),
        digits: o.digits.or(file.digits).unwrap_or(4),
        at: file.at,
        grid,
        params: file.params,
        alternative: file.alternative,
        asymptotic_reps: file.finite_sample.asymptotic_reps.unwrap_or(20_000),
        max_failure_rate: file.finite_sample.max_failure_rate.unwrap_or(0.01),
        refine_sizes: file.refine.sizes.unwrap_or_else(|| vec![11, 41, 161]),
        table: o
            .table
            .clone()
            .or(file.linkage.table)
            .unwrap_or_else(|| "all".into()),
        betas: file.linkage.betas.unwrap_or(1000),
        threads: o.threads.or(file.mc.threads).or(env_threads),
        out: o.out.clone().or(file.out),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    set_threads(cfg.threads)?;
    match cli.command {
        Command::Weights => commands::weights(&cfg),
        Command::SimulateSup => commands::simulate_sup(&cfg),
        Command::LinkageTables => commands::linkage_tables(&cfg),
        Command::FiniteSample => commands::finite_sample(&cfg),
        Command::Refine => commands::refine(&cfg),
        Command::Power => commands::power(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
