//! Configuration, CSV output, benchmarking and exit-code mapping for the
//! `refdiff` command.

pub mod bench;
pub mod config;
pub mod csv;

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use refdiff_core::curve::{curve_error, rocking_curve, RockingCurve};
use refdiff_core::error::{CompareError, ConfigError, SolverError};
use refdiff_core::solver::{PreparedProblem, UnknownMethod};

use crate::config::RunConfig;
use crate::csv::{parse_curve, write_curve, CurveParseError};

/// Invalid command-line usage.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Ok = 0,
    Other = 1,
    Config = 2,
    Breakdown = 3,
    Mismatch = 4,
    Io = 5,
}

fn classify_solver(e: &SolverError) -> ExitKind {
    match e {
        SolverError::Config(_) => ExitKind::Config,
        SolverError::Angle { source, .. } => classify_solver(source),
        _ => ExitKind::Breakdown,
    }
}

/// Exit code for an error, from the innermost recognised cause outward.
pub fn classify(err: &anyhow::Error) -> ExitKind {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<UnknownMethod>() || cause.is::<UsageError>() {
            return ExitKind::Config;
        }
        if let Some(e) = cause.downcast_ref::<SolverError>() {
            return classify_solver(e);
        }
        if cause.is::<CompareError>() {
            return ExitKind::Mismatch;
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { ExitKind::Io } else { ExitKind::Config };
        }
        if cause.is::<CurveParseError>() || cause.is::<std::io::Error>() {
            return ExitKind::Io;
        }
    }
    ExitKind::Other
}

/// Runs `f` on a dedicated pool of `threads` workers, or on a default-sized
/// pool when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(UsageError("thread count must be at least 1".into()).into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building thread pool")?;
    Ok(pool.install(f))
}

/// Solves the configured rocking curve on the current pool.
pub fn simulate(config: &RunConfig) -> Result<RockingCurve> {
    let problem = config.problem()?;
    let grid = config.grid()?;
    let prepared = PreparedProblem::new(problem, config.solver()?)?;
    Ok(rocking_curve(&prepared, &grid)?)
}

/// Solves and writes the curve CSV. `threads` overrides the config value.
pub fn run_simulate(config: &RunConfig, out: &Path, threads: Option<usize>) -> Result<RockingCurve> {
    let curve = with_threads(threads.or(config.threads), || simulate(config))??;
    fs::write(out, write_curve(&curve)).with_context(|| format!("writing {}", out.display()))?;
    Ok(curve)
}

pub fn read_curve(path: &Path) -> Result<RockingCurve> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_curve(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Error of `a` against reference `b`.
pub fn run_compare(a: &Path, b: &Path) -> Result<f64> {
    let curve = read_curve(a)?;
    let reference = read_curve(b)?;
    Ok(curve_error(&curve, &reference)?)
}
