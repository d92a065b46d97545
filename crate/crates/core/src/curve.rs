//! Diffracted intensities, angle grids and rocking curves.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{CompareError, ConfigError, SolverError};
use crate::kernels::CVector;
use crate::model::GammaMatrix;
use crate::solver::{Method, PreparedProblem};

/// Per-rod diffracted intensity, in rod order.
pub type IntensityVector = Vec<f64>;

/// `η_i = |ρ_i|² sin θ0 · g_0 / g_i` on propagating rods, zero on evanescent ones.
pub fn intensity(rho: &CVector, gamma: &GammaMatrix, sin_theta0: f64) -> IntensityVector {
    let g = gamma.diag();
    let g0 = g[0].re;
    (0..rho.len())
        .map(|i| {
            if i == 0 {
                rho[0].norm_sqr() * sin_theta0
            } else if gamma.is_propagating(i) {
                rho[i].norm_sqr() * sin_theta0 * g0 / g[i].re
            } else {
                0.0
            }
        })
        .collect()
}

/// Ordered list of `(θ0, θ1)` pairs in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    points: Vec<(f64, f64)>,
}

impl AngleGrid {
    /// Azimuth-major product: every `θ0` for the first `θ1`, then the next.
    pub fn product(theta0: &[f64], theta1: &[f64]) -> Result<Self, ConfigError> {
        let points = theta1.iter().flat_map(|&t1| theta0.iter().map(move |&t0| (t0, t1))).collect();
        Self::from_points(points)
    }

    /// `count` glancing angles `start, start + step, …` at a single azimuth.
    pub fn linear(start: f64, step: f64, count: usize, theta1: f64) -> Result<Self, ConfigError> {
        let theta0: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
        Self::product(&theta0, &[theta1])
    }

    /// Validates that `θ0` increases strictly inside each run of equal `θ1`.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self, ConfigError> {
        if points.is_empty() {
            return Err(ConfigError::EmptyGrid);
        }
        for &(t0, t1) in &points {
            if !t0.is_finite() || t0 <= 0.0 || t0 >= 90.0 {
                return Err(ConfigError::GlancingAngle(t0));
            }
            if !t1.is_finite() {
                return Err(ConfigError::Azimuth(t1));
            }
        }
        for w in points.windows(2) {
            if w[0].1 == w[1].1 && w[1].0 <= w[0].0 {
                return Err(ConfigError::UnsortedGrid);
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub theta0: f64,
    pub theta1: f64,
    pub eta: IntensityVector,
}

/// Run information that is not part of the numeric curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMetadata {
    pub method: Method,
    /// Realised step size.
    pub dz: f64,
    pub steps: usize,
    pub threshold: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RockingCurve {
    pub rods: Vec<(i32, i32)>,
    pub rows: Vec<CurveRow>,
    pub metadata: Option<CurveMetadata>,
}

impl RockingCurve {
    /// Index of a rod's column, if present.
    pub fn rod_column(&self, rod: (i32, i32)) -> Option<usize> {
        self.rods.iter().position(|&r| r == rod)
    }

    /// Intensity column of one rod across all rows.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.eta[index]).collect()
    }
}

/// Solves every grid point on the current rayon pool. Rows come back in grid
/// order whatever the thread count; on failure the first failing angle in
/// grid order is reported.
pub fn rocking_curve(problem: &PreparedProblem, grid: &AngleGrid) -> Result<RockingCurve, SolverError> {
    let start = Instant::now();
    let solved: Vec<Result<CurveRow, SolverError>> = grid
        .points()
        .par_iter()
        .map(|&(theta0, theta1)| problem.solve_angle(theta0, theta1).map(|s| CurveRow { theta0, theta1, eta: s.eta }))
        .collect();
    let rows = solved.into_iter().collect::<Result<Vec<_>, _>>()?;
    let config = problem.config();
    let plan = problem.plan();
    Ok(RockingCurve {
        rods: problem.problem().rods.indices(),
        rows,
        metadata: Some(CurveMetadata {
            method: config.method,
            dz: plan.step_size(),
            steps: plan.steps(),
            threshold: config.threshold,
            wall_seconds: start.elapsed().as_secs_f64(),
        }),
    })
}

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_angles ‖η − η_ref‖₂ / max_angles ‖η_ref‖₂`. Curves must share rods and
/// angles row for row. Zero against zero gives zero; anything against a zero
/// reference gives infinity.
pub fn curve_error(curve: &RockingCurve, reference: &RockingCurve) -> Result<f64, CompareError> {
    check_compatible(curve, reference)?;
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for (a, b) in curve.rows.iter().zip(&reference.rows) {
        num = num.max(l2(a.eta.iter().zip(&b.eta).map(|(x, y)| x - y)));
        den = den.max(l2(b.eta.iter().copied()));
    }
    Ok(if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    })
}

/// Largest absolute intensity difference over all rows and rods.
pub fn max_abs_difference(curve: &RockingCurve, reference: &RockingCurve) -> Result<f64, CompareError> {
    check_compatible(curve, reference)?;
    Ok(curve
        .rows
        .iter()
        .zip(&reference.rows)
        .flat_map(|(a, b)| a.eta.iter().zip(&b.eta).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max))
}

fn check_compatible(a: &RockingCurve, b: &RockingCurve) -> Result<(), CompareError> {
    if a.rows.len() != b.rows.len() {
        return Err(CompareError::RowCount(a.rows.len(), b.rows.len()));
    }
    if a.rods.len() != b.rods.len() {
        return Err(CompareError::RodCount(a.rods.len(), b.rods.len()));
    }
    if let Some(index) = (0..a.rods.len()).find(|&i| a.rods[i] != b.rods[i]) {
        return Err(CompareError::Rod { index, a: a.rods[index], b: b.rods[index] });
    }
    for (row, (x, y)) in a.rows.iter().zip(&b.rows).enumerate() {
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-9 * p.abs().max(q.abs()).max(1.0);
        if !close(x.theta0, y.theta0) || !close(x.theta1, y.theta1) {
            return Err(CompareError::Angles { row, a0: x.theta0, a1: x.theta1, b0: y.theta0, b1: y.theta1 });
        }
        if x.eta.len() != a.rods.len() || y.eta.len() != a.rods.len() {
            return Err(CompareError::RodCount(x.eta.len(), y.eta.len()));
        }
    }
    Ok(())
}
