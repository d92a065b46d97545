//! Method selection and per-angle solves on a prepared problem.

use std::fmt;
use std::str::FromStr;

use crate::conventional::{self, midpoint_samples};
use crate::curve::{intensity, IntensityVector};
use crate::error::{ConfigError, SolverError};
use crate::kernels::{CMatrix, CVector};
use crate::model::{build_gamma, BeamGeometry, GammaMatrix, PotentialEvaluator, PotentialField, PotentialSamples, ReciprocalRodSet, SlicingPlan};
use crate::model::slicing::TABLE_BUDGET_BYTES;
use crate::proposed::{self, validate_threshold, Stepper, StepperKind, StepperSpec, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Conventional,
    Rk4,
    Sp4,
    Sp6,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Conventional, Method::Rk4, Method::Sp4, Method::Sp6];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Conventional => "conventional",
            Method::Rk4 => "rk4",
            Method::Sp4 => "sp4",
            Method::Sp6 => "sp6",
        }
    }

    fn stepper_kind(&self) -> Option<StepperKind> {
        match self {
            Method::Conventional => None,
            Method::Rk4 => Some(StepperKind::Rk4),
            Method::Sp4 => Some(StepperKind::Sp4),
            Method::Sp6 => Some(StepperKind::Sp6),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method '{0}' (expected conventional, rk4, sp4 or sp6)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Target step (Å); the realised step divides the slab evenly.
    pub dz: f64,
    pub threshold: f64,
    /// Potential tables larger than this are evaluated on the fly.
    pub table_budget: usize,
}

impl SolverConfig {
    pub fn new(method: Method, dz: f64) -> Self {
        Self { method, dz, threshold: DEFAULT_THRESHOLD, table_budget: TABLE_BUDGET_BYTES }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

/// Everything about a diffraction problem that does not depend on the angle.
#[derive(Debug, Clone)]
pub struct Problem {
    pub rods: ReciprocalRodSet,
    /// Vacuum wavenumber γ (Å⁻¹).
    pub gamma: f64,
    pub field: PotentialField,
}

/// A problem bound to a solver configuration, with potential samples
/// precomputed for every angle to share.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    problem: Problem,
    config: SolverConfig,
    evaluator: PotentialEvaluator,
    stepper: Option<StepperSpec>,
    slab: PotentialSamples,
    bulk: Option<PotentialSamples>,
}

/// Result of one angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSolution {
    pub rho: CVector,
    pub eta: IntensityVector,
}

impl PreparedProblem {
    pub fn new(problem: Problem, config: SolverConfig) -> Result<Self, SolverError> {
        if !(problem.gamma > 0.0) || !problem.gamma.is_finite() {
            return Err(ConfigError::Wavenumber(problem.gamma).into());
        }
        validate_threshold(config.threshold)?;
        let evaluator = problem.field.bind(&problem.rods)?;
        let stepper = config.method.stepper_kind().map(StepperSpec::from_kind).transpose()?;
        let fractions: Vec<f64> = match &stepper {
            Some(s) => s.node_fractions().to_vec(),
            None => vec![0.5],
        };
        let plan = SlicingPlan::new(problem.field.bottom(), 0.0, config.dz)?;
        let slab = PotentialSamples::new(&evaluator, plan, &fractions, config.table_budget)?;
        let bulk = match problem.field.bulk_period() {
            Some(_) => Some(conventional::bulk_samples(&evaluator, config.dz, &fractions)?.1),
            None => None,
        };
        Ok(Self { problem, config, evaluator, stepper, slab, bulk })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn plan(&self) -> &SlicingPlan {
        self.slab.plan()
    }

    pub fn gamma_matrix(&self, theta0: f64, theta1: f64) -> Result<(BeamGeometry, GammaMatrix), ConfigError> {
        let beam = BeamGeometry::new(self.problem.gamma, theta0, theta1)?;
        let gamma = build_gamma(&beam, &self.problem.rods)?;
        Ok((beam, gamma))
    }

    fn initial_reflection(&self, gamma: &GammaMatrix) -> Result<CMatrix, SolverError> {
        let n = gamma.len();
        let Some(bulk) = &self.bulk else {
            return Ok(CMatrix::zeros(n, n));
        };
        match &self.stepper {
            None => conventional::bulk_reflection_from_samples(bulk, gamma, self.evaluator.is_zero()),
            Some(stepper) => proposed::bulk_reflection_from_samples(
                bulk,
                gamma,
                stepper,
                self.config.threshold,
                self.evaluator.is_zero(),
            ),
        }
    }

    /// `ρ(0)` and intensities at one angle pair.
    pub fn solve_angle(&self, theta0: f64, theta1: f64) -> Result<AngleSolution, SolverError> {
        let wrap = |source: SolverError| SolverError::Angle { theta0, theta1, source: Box::new(source) };
        let (beam, gamma) = self.gamma_matrix(theta0, theta1).map_err(|e| wrap(e.into()))?;
        let r_init = self.initial_reflection(&gamma).map_err(wrap)?;
        let rho = match &self.stepper {
            None => conventional::solve_conventional(&self.slab, &gamma, &r_init),
            Some(stepper) => proposed::solve_proposed(&self.slab, &gamma, stepper, self.config.threshold, &r_init),
        }
        .map_err(wrap)?;
        let eta = intensity(&rho, &gamma, beam.sin_theta0());
        Ok(AngleSolution { rho, eta })
    }
}

/// Conventional solve with midpoint samples, for callers that hold an evaluator.
pub fn conventional_reflection(
    evaluator: &PotentialEvaluator,
    gamma: &GammaMatrix,
    dz: f64,
) -> Result<CVector, SolverError> {
    let plan = SlicingPlan::new(evaluator.field().bottom(), 0.0, dz)?;
    let samples = midpoint_samples(evaluator, plan, TABLE_BUDGET_BYTES)?;
    let n = gamma.len();
    conventional::solve_conventional(&samples, gamma, &CMatrix::zeros(n, n))
}
