//! Command-line front end.

pub mod config;
pub mod output;
pub mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::hilbert::DEFAULT_MAX_DIM;
use config::{Format, RunConfig};
use run::{Context, Report};

#[derive(Debug, Parser)]
#[command(name = "phonon-laser", version, about = "Phonon laser statistics in a three-mode optomechanical system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; defaults to the path in the config, then stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest allowed Hilbert space dimension.
    #[arg(long, global = true)]
    pub max_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Semiclassical limit cycle and Fano factor.
    Analytics,
    /// Analytics over a one- or two-dimensional parameter grid.
    Sweep,
    /// Exact steady state of the master equation.
    Steady,
    /// Monte Carlo wave-function ensemble.
    Mcwf,
    /// Mechanical Wigner function.
    Wigner,
    /// Check the approximations behind the analytics; exits 1 if any fails.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analytics => "analytics",
            Command::Sweep => "sweep",
            Command::Steady => "steady",
            Command::Mcwf => "mcwf",
            Command::Wigner => "wigner",
            Command::Validate => "validate",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) | Error::Io(_) => 2,
        Error::SizeLimit { .. }
        | Error::Solver(_)
        | Error::Integration { .. }
        | Error::Trajectory { .. }
        | Error::InvalidState(_)
        | Error::DimensionMismatch { .. } => 3,
    }
}

pub fn execute(command: Command, ctx: &Context) -> Result<Report> {
    match command {
        Command::Analytics => run::run_analytics(ctx),
        Command::Sweep => run::run_sweep(ctx),
        Command::Steady => run::run_quantum(ctx, false),
        Command::Mcwf => run::run_quantum(ctx, true),
        Command::Wigner => run::run_wigner(ctx),
        Command::Validate => run::run_validate(ctx),
    }
}

fn write_report(report: &Report, format: Format, out: Option<&PathBuf>) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(|e| {
            Error::Io(io::Error::new(e.kind(), format!("cannot create {}: {e}", p.display())))
        })?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match format {
        Format::Csv => report.table.write_csv(&mut w)?,
        Format::Json => report.table.write_json(&mut w, &report.metadata)?,
        Format::Bin => match &report.grid {
            Some(g) => g.write_raster(&mut w)?,
            None => return Err(Error::Usage("--format bin is only available for wigner".into())),
        },
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<i32> {
    let path = cli
        .common
        .config
        .as_ref()
        .ok_or_else(|| Error::Usage("--config <file> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    if let Some(mode) = cfg.mode {
        let declared = format!("{mode:?}").to_lowercase();
        if declared != cli.command.name() {
            log::warn!("config declares mode '{declared}', running '{}'", cli.command.name());
        }
    }
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        // fails only if the pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context {
        seed: cli.common.seed.or(cfg.seed).unwrap_or(0),
        max_dim: cli.common.max_dim.unwrap_or(DEFAULT_MAX_DIM),
        cfg,
    };
    let format = cli.common.format.or(ctx.cfg.output.format).unwrap_or(Format::Csv);
    if format == Format::Bin && !matches!(cli.command, Command::Wigner) {
        return Err(Error::Usage("--format bin is only available for wigner".into()));
    }
    let report = execute(cli.command, &ctx)?;
    let out = cli.common.out.as_ref().or(ctx.cfg.output.path.as_ref());
    write_report(&report, format, out)?;
    if report.flags.is_empty() {
        Ok(0)
    } else {
        eprintln!("validity conditions violated: {}", report.flags.join(", "));
        Ok(1)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
