//! Time–error benchmark over methods and step sizes.

use std::time::Instant;

use anyhow::{Context, Result};
use refdiff_core::curve::{curve_error, rocking_curve, AngleGrid, RockingCurve};
use refdiff_core::solver::{Method, PreparedProblem, Problem, SolverConfig};

use crate::config::{MethodStep, RunConfig};
use crate::csv::format_sci;
use crate::UsageError;

/// E-6 preferred step sizes (Å).
pub const DZ_PRESETS: [f64; 12] = [0.010, 0.015, 0.022, 0.033, 0.047, 0.068, 0.10, 0.15, 0.22, 0.33, 0.47, 0.68];

pub const DEFAULT_REPEATS: usize = 5;

pub const MIN_REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub methods: Vec<Method>,
    pub dzs: Vec<f64>,
    pub repeats: usize,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self { methods: Method::ALL.to_vec(), dzs: DZ_PRESETS.to_vec(), repeats: DEFAULT_REPEATS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: Method,
    pub dz: f64,
    /// Median wall time of the repeats (s).
    pub wall_seconds: Option<f64>,
    /// Error against the fine reference.
    pub eacc: Option<f64>,
    /// Error against the baseline run, when one is configured.
    pub eorig: Option<f64>,
    pub repeats: usize,
    /// `None` on success, otherwise the solver failure.
    pub failure: Option<String>,
}

impl BenchRecord {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn solve(problem: &Problem, grid: &AngleGrid, config: SolverConfig) -> Result<RockingCurve> {
    let prepared = PreparedProblem::new(problem.clone(), config)?;
    Ok(rocking_curve(&prepared, grid)?)
}

fn method_step(problem: &Problem, grid: &AngleGrid, step: &MethodStep, threshold: f64) -> Result<RockingCurve> {
    let method: Method = step.method.parse()?;
    solve(problem, grid, SolverConfig::new(method, step.dz).with_threshold(threshold))
}

/// Runs every `(method, dz)` cell on the current rayon pool. The reference
/// solve must succeed; cell failures become failed rows.
pub fn run_bench(config: &RunConfig, plan: &BenchPlan) -> Result<Vec<BenchRecord>> {
    if plan.repeats < MIN_REPEATS {
        return Err(UsageError(format!("bench needs at least {MIN_REPEATS} repeats, got {}", plan.repeats)).into());
    }
    if plan.methods.is_empty() || plan.dzs.is_empty() {
        return Err(UsageError("bench needs at least one method and one dz".into()).into());
    }
    let problem = config.problem()?;
    let grid = config.grid()?;
    let threshold = config.rhst_threshold.0;
    let bench = config.bench_config();
    let reference = method_step(&problem, &grid, &bench.reference, threshold).context("reference solve failed")?;
    let baseline = match &bench.baseline {
        Some(b) => Some(method_step(&problem, &grid, b, threshold).context("baseline solve failed")?),
        None => None,
    };
    let mut records = Vec::new();
    for &method in &plan.methods {
        for &dz in &plan.dzs {
            let solver = SolverConfig::new(method, dz).with_threshold(threshold);
            let mut times = Vec::with_capacity(plan.repeats);
            let mut outcome = None;
            for _ in 0..plan.repeats {
                let start = Instant::now();
                let result = solve(&problem, &grid, solver);
                times.push(start.elapsed().as_secs_f64());
                match result {
                    Ok(curve) => outcome = Some(Ok(curve)),
                    Err(e) => {
                        outcome = Some(Err(format!("{e:#}")));
                        break;
                    }
                }
            }
            let record = match outcome.expect("at least one repeat") {
                Ok(curve) => BenchRecord {
                    method,
                    dz,
                    wall_seconds: Some(median(&mut times)),
                    eacc: Some(curve_error(&curve, &reference)?),
                    eorig: baseline.as_ref().map(|b| curve_error(&curve, b)).transpose()?,
                    repeats: plan.repeats,
                    failure: None,
                },
                Err(message) => BenchRecord {
                    method,
                    dz,
                    wall_seconds: None,
                    eacc: None,
                    eorig: None,
                    repeats: plan.repeats,
                    failure: Some(message),
                },
            };
            records.push(record);
        }
    }
    Ok(records)
}

/// Smallest median time among successful rows of `method` whose reference
/// error is at most `target`.
pub fn time_at_error(records: &[BenchRecord], method: Method, target: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.method == method && r.ok() && r.eacc.is_some_and(|e| e <= target))
        .filter_map(|r| r.wall_seconds)
        .min_by(f64::total_cmp)
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sci).unwrap_or_default()
}

pub const BENCH_HEADER: &str = "method,dz,wall_seconds,eacc,eorig,repeats,status";

pub fn write_bench(records: &[BenchRecord]) -> String {
    let mut out = format!("{BENCH_HEADER}\n");
    for r in records {
        let status = match &r.failure {
            None => "ok".to_string(),
            Some(m) => format!("failed: {}", m.replace([',', '\n', '\r'], ";")),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            format_sci(r.dz),
            optional(r.wall_seconds),
            optional(r.eacc),
            optional(r.eorig),
            r.repeats,
            status
        ));
    }
    out
}

/// Inverse of [`write_bench`] for downstream checks.
pub fn parse_bench(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    anyhow::ensure!(lines.next() == Some(BENCH_HEADER), "bench csv header mismatch");
    let cell = |s: &str| -> Result<Option<f64>> { Ok(if s.is_empty() { None } else { Some(s.parse()?) }) };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.splitn(7, ',').collect();
            anyhow::ensure!(f.len() == 7, "bench row has {} fields", f.len());
            Ok(BenchRecord {
                method: f[0].parse()?,
                dz: f[1].parse()?,
                wall_seconds: cell(f[2])?,
                eacc: cell(f[3])?,
                eorig: cell(f[4])?,
                repeats: f[5].parse()?,
                failure: if f[6] == "ok" { None } else { Some(f[6].trim_start_matches("failed: ").to_string()) },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: Method, dz: f64, t: f64, e: f64) -> BenchRecord {
        BenchRecord { method, dz, wall_seconds: Some(t), eacc: Some(e), eorig: None, repeats: 5, failure: None }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0, 5.0, 4.0]), 3.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn time_at_error_picks_fastest_accurate_row() {
        let rows = vec![
            record(Method::Sp4, 0.01, 3.0, 1e-9),
            record(Method::Sp4, 0.1, 1.0, 1e-5),
            record(Method::Sp4, 0.3, 0.5, 1e-2),
            record(Method::Rk4, 0.01, 0.1, 1e-5),
        ];
        assert_eq!(time_at_error(&rows, Method::Sp4, 1e-4), Some(1.0));
        assert_eq!(time_at_error(&rows, Method::Sp6, 1e-4), None);
    }

    #[test]
    fn bench_csv_round_trip() {
        let mut rows = vec![record(Method::Conventional, 0.01, 2.0, 3e-5)];
        rows.push(BenchRecord { failure: Some("breakdown, step 3".into()), wall_seconds: None, eacc: None, ..record(Method::Rk4, 0.68, 0.0, 0.0) });
        let text = write_bench(&rows);
        let back = parse_bench(&text).unwrap();
        assert_eq!(back[0], rows[0]);
        assert_eq!(back[1].failure.as_deref(), Some("breakdown; step 3"));
        assert_eq!(text.lines().count(), 3);
    }
}
