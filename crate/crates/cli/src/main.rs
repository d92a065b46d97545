use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use refdiff_cli::bench::{run_bench, write_bench, BenchPlan, DEFAULT_REPEATS, DZ_PRESETS};
use refdiff_cli::config::{parse_dz_list, parse_methods, RunConfig};
use refdiff_cli::csv::format_sci;
use refdiff_cli::{classify, run_compare, run_simulate, with_threads, UsageError};
use refdiff_core::solver::Method;

#[derive(Parser)]
#[command(name = "refdiff", version, about = "Many-beam reflection rocking curves")]
struct Cli {
    /// Worker threads for the angle sweep.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a rocking curve and write it as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time and error of each method over a list of step sizes.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated step sizes; defaults to the E-6 presets.
        #[arg(long)]
        dz: Option<String>,
        /// Comma-separated methods; defaults to all.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the curve error of A against reference B.
    Compare { a: PathBuf, b: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| UsageError("no output path: pass --out or set output in the config".into()))?;
            let curve = run_simulate(&cfg, &out, cli.threads)?;
            if let Some(m) = &curve.metadata {
                eprintln!(
                    "{}: {} angles, {} steps of {} A, {:.3} s -> {}",
                    m.method,
                    curve.rows.len(),
                    m.steps,
                    m.dz,
                    m.wall_seconds,
                    out.display()
                );
            }
        }
        Command::Bench { config, dz, methods, repeats, out } => {
            let cfg = RunConfig::load(&config)?;
            let plan = BenchPlan {
                methods: match methods {
                    Some(list) => parse_methods(&list)?,
                    None => Method::ALL.to_vec(),
                },
                dzs: match dz {
                    Some(list) => parse_dz_list(&list)?,
                    None => DZ_PRESETS.to_vec(),
                },
                repeats,
            };
            let records = with_threads(cli.threads.or(cfg.threads), || run_bench(&cfg, &plan))??;
            fs::write(&out, write_bench(&records)).with_context(|| format!("writing {}", out.display()))?;
            let failed = records.iter().filter(|r| !r.ok()).count();
            eprintln!("{} bench rows ({} failed) -> {}", records.len(), failed, out.display());
        }
        Command::Compare { a, b } => {
            println!("{}", format_sci(run_compare(&a, &b)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
