//! `coulomb-spectral`: every experiment of the toolkit as a subcommand.
//!
//! Exit codes: 0 when the run succeeds and its claim check passes, 1 when the
//! check fails or the computation breaks down, 2 on usage errors.

mod commands;
mod config;
mod report;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coulomb_spectral::Error;

use commands::{BoundsArgs, DensityArgs, ProjectorArgs, SpectrumArgs, SumRuleArgs, WeylArgs};
use report::{Format, Provenance};

/// Caps the rayon worker count.
const THREADS_ENV: &str = "COULOMB_SPECTRAL_THREADS";

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidGrid(_)
            | Error::InvalidCoupling(_)
            | Error::SupportTooLarge { .. }
            | Error::Precondition(_) => Failure::Usage(e.to_string()),
            other => Failure::Compute(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coulomb-spectral", version, about = "Spectral experiments on the Coulomb operator")]
struct Cli {
    /// Flat key = value file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Truncated one-particle density profile.
    Density(DensityArgs),
    /// Weighted radial eigenvalues of all channels.
    Spectrum(SpectrumArgs),
    /// Gap-based cluster segmentation with n² state counts.
    Clusters(SpectrumArgs),
    /// Cluster shifts under a compactly supported perturbation.
    Perturb(SpectrumArgs),
    /// Eigenvalue counting against the phase-space volume.
    Weyl(WeylArgs),
    /// Contour projectors of one channel and the projector-distance lemma.
    Projector(ProjectorArgs),
    /// Coupling-integral sum rule for the negative part.
    Sumrule(SumRuleArgs),
    /// Eigenfunction bound scans.
    Bounds(BoundsArgs),
}

/// Dense kernels run sequentially so their rounding, and hence the report
/// bytes, do not depend on the worker count; parallelism stays at the
/// channel level where results are collected in order.
fn configure_threads() -> Result<(), Failure> {
    faer::set_global_parallelism(faer::Par::Seq);
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} = '{raw}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Compute(format!("thread pool: {e}")))
}

fn global_format(cli: Option<Format>, file: Option<&String>) -> Result<Format, Failure> {
    match (cli, file) {
        (Some(f), _) => Ok(f),
        (None, Some(s)) => match s.as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Failure::Usage(format!("config: format '{other}' is not csv or json"))),
        },
        (None, None) => Ok(Format::Csv),
    }
}

/// Returns whether the claim check passed.
fn run(cli: Cli) -> Result<bool, Failure> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => Default::default(),
    };
    let format = global_format(cli.format, file.get("format"))?;
    let out = cli.out.clone().or_else(|| file.get("out").map(PathBuf::from));

    let (name, (params, report)) = match &cli.command {
        Command::Density(a) => ("density", commands::density(config::merge(a, &file)?)?),
        Command::Spectrum(a) => ("spectrum", commands::spectrum(config::merge(a, &file)?)?),
        Command::Clusters(a) => ("clusters", commands::clusters(config::merge(a, &file)?)?),
        Command::Perturb(a) => ("perturb", commands::perturb(config::merge(a, &file)?)?),
        Command::Weyl(a) => ("weyl", commands::weyl(config::merge(a, &file)?)?),
        Command::Projector(a) => ("projector", commands::projector(config::merge(a, &file)?)?),
        Command::Sumrule(a) => ("sumrule", commands::sumrule(config::merge(a, &file)?)?),
        Command::Bounds(a) => ("bounds", commands::bounds(config::merge(a, &file)?)?),
    };
    let provenance = Provenance::new(name, params, format, report.grid.clone());
    let text = report::render(&provenance, &report, format);
    match &out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Compute(format!("cannot write {}: {e}", path.display())))?
        }
        None => {
            std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| Failure::Compute(format!("stdout: {e}")))?
        }
    }
    if !report.pass {
        eprintln!("claim {} not confirmed; see the report summary", report.claim_id);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
