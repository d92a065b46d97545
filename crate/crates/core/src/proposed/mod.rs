//! Direct integration of the second-order matrix equation with single-step
//! integrators, plus the basis change that keeps the state well conditioned.

pub mod coefficients;
pub mod stepper;

use std::collections::VecDeque;

use num_complex::Complex64;

pub use stepper::{empirical_order, Rk4, SplittingScheme, SplittingVariant, StepWork, Stepper, StepperKind, StepperSpec};

use crate::conventional::{bulk_samples, BULK_MAX_PERIODS, BULK_TOLERANCE};
use crate::error::{ConfigError, SolverError};
use crate::kernels::{all_finite, frobenius_norm, gershgorin_cond, CMatrix, CVector, LuFactor, I};
use crate::model::{GammaMatrix, PotentialEvaluator, PotentialSamples};

/// Default trigger for the basis change.
pub const DEFAULT_THRESHOLD: f64 = 1000.0;

const XI_HISTORY: usize = 16;

/// `Z = [Q; P]`: solution columns and their z-derivatives at height `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationState {
    pub q: CMatrix,
    pub p: CMatrix,
    pub z: f64,
}

/// `S = [[Γ, −iI], [Γ, iI]]`, applied blockwise.
#[derive(Debug, Clone, Copy)]
pub struct SMatrix<'a> {
    gamma: &'a GammaMatrix,
}

impl<'a> SMatrix<'a> {
    pub fn new(gamma: &'a GammaMatrix) -> Self {
        Self { gamma }
    }

    /// `S·[Q; P] = [ΓQ − iP; ΓQ + iP]`.
    pub fn apply(&self, q: &CMatrix, p: &CMatrix) -> (CMatrix, CMatrix) {
        let mut gq = q.clone();
        for (j, g) in self.gamma.diag().iter().enumerate() {
            for v in gq.row_mut(j).iter_mut() {
                *v *= g;
            }
        }
        let ip = p * I;
        (&gq - &ip, gq + ip)
    }

    /// `S⁻¹·[A; B] = ½·[Γ⁻¹(A + B); i(A − B)]`.
    pub fn apply_inverse(&self, a: &CMatrix, b: &CMatrix) -> (CMatrix, CMatrix) {
        let mut q = a + b;
        for (j, g) in self.gamma.diag().iter().enumerate() {
            let inv = 0.5 / g;
            for v in q.row_mut(j).iter_mut() {
                *v *= inv;
            }
        }
        let p = (a - b) * (I * 0.5);
        (q, p)
    }
}

/// `Z(z_e) = S⁻¹·[I; R_init]`.
pub fn initial_state(gamma: &GammaMatrix, r_init: &CMatrix, z: f64) -> PropagationState {
    let n = gamma.len();
    let (q, p) = SMatrix::new(gamma).apply_inverse(&CMatrix::identity(n, n), r_init);
    PropagationState { q, p, z }
}

/// `R = lower·upper⁻¹` where `[upper; lower] = S·Z`.
pub fn reflection_from_state(state: &PropagationState, gamma: &GammaMatrix, step: usize) -> Result<CMatrix, SolverError> {
    let (upper, lower) = SMatrix::new(gamma).apply(&state.q, &state.p);
    let lu = LuFactor::new(upper).map_err(|err| SolverError::Breakdown {
        step,
        reason: format!("upward block is singular: {err}"),
        recent_xi: Vec::new(),
    })?;
    let r = lu.solve_right(&lower);
    if !all_finite(&r) {
        return Err(SolverError::Breakdown {
            step,
            reason: "reflection matrix is not finite".into(),
            recent_xi: Vec::new(),
        });
    }
    Ok(r)
}

pub fn validate_threshold(threshold: f64) -> Result<f64, ConfigError> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(ConfigError::Threshold(threshold));
    }
    Ok(threshold)
}

/// Replace `[Q; P]` by `[I; P·Q⁻¹]` when `ξ(Q)` exceeds `threshold`.
///
/// Returns `ξ` and whether the transformation was applied.
pub fn apply_rhst(state: &mut PropagationState, threshold: f64) -> Result<(f64, bool), SolverError> {
    let xi = gershgorin_cond(&state.q);
    if !(xi > threshold) {
        return Ok((xi, false));
    }
    let n = state.q.nrows();
    let lu = LuFactor::new(state.q.clone()).map_err(|err| SolverError::Breakdown {
        step: 0,
        reason: format!("cannot transform basis: {err}"),
        recent_xi: vec![xi],
    })?;
    state.p = lu.solve_right(&state.p);
    state.q = CMatrix::identity(n, n);
    Ok((xi, true))
}

/// What happened in one step, for callers that trace the propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub z: f64,
    pub xi: f64,
    pub transformed: bool,
}

/// Summary of a completed propagation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagationSummary {
    pub steps: usize,
    pub transforms: usize,
    pub max_xi: f64,
}

/// Step through every slice of `samples`, checking the basis after each step.
pub fn propagate<S, F>(
    samples: &PotentialSamples,
    gamma: &GammaMatrix,
    stepper: &S,
    threshold: f64,
    state: &mut PropagationState,
    mut observe: F,
) -> Result<PropagationSummary, SolverError>
where
    S: Stepper + ?Sized,
    F: FnMut(&StepRecord, &PropagationState),
{
    let threshold = validate_threshold(threshold)?;
    if samples.fractions() != stepper.node_fractions() {
        return Err(ConfigError::Scheme("potential samples do not match the stepper nodes".into()).into());
    }
    let n = gamma.len();
    let plan = *samples.plan();
    let h = plan.step_size();
    let squared: Vec<Complex64> = gamma.squared().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut m: Vec<CMatrix> = stepper.node_fractions().iter().map(|_| CMatrix::zeros(n, n)).collect();
    let mut work = StepWork::new(n);
    let mut history: VecDeque<f64> = VecDeque::with_capacity(XI_HISTORY);
    let mut summary = PropagationSummary { steps: plan.steps(), transforms: 0, max_xi: 0.0 };
    let breakdown = |step: usize, reason: String, history: &VecDeque<f64>| SolverError::Breakdown {
        step,
        reason,
        recent_xi: history.iter().copied().collect(),
    };
    for step in 0..plan.steps() {
        for (node, slot) in m.iter_mut().enumerate() {
            samples.load_into(step, node, slot)?;
            for (j, g2) in squared.iter().enumerate() {
                slot[(j, j)] += g2;
            }
        }
        stepper.step(state, h, &m, gamma, &mut work);
        state.z = plan.point(step + 1);
        if !all_finite(&state.q) || !all_finite(&state.p) {
            return Err(breakdown(step, "state is not finite".into(), &history));
        }
        let (xi, transformed) = apply_rhst(state, threshold).map_err(|err| match err {
            SolverError::Breakdown { reason, .. } => breakdown(step, reason, &history),
            other => other,
        })?;
        if history.len() == XI_HISTORY {
            history.pop_front();
        }
        history.push_back(xi);
        summary.transforms += transformed as usize;
        if xi.is_finite() {
            summary.max_xi = summary.max_xi.max(xi);
        } else {
            summary.max_xi = f64::INFINITY;
        }
        observe(&StepRecord { step, z: state.z, xi, transformed }, state);
    }
    Ok(summary)
}

/// `ρ(0)` for a unit incident wave on the zero rod.
pub fn solve_proposed<S: Stepper + ?Sized>(
    samples: &PotentialSamples,
    gamma: &GammaMatrix,
    stepper: &S,
    threshold: f64,
    r_init: &CMatrix,
) -> Result<CVector, SolverError> {
    let mut state = initial_state(gamma, r_init, samples.plan().start());
    propagate(samples, gamma, stepper, threshold, &mut state, |_, _| {})?;
    let r = reflection_from_state(&state, gamma, samples.plan().steps())?;
    Ok(r.column(0).into_owned())
}

/// Bulk reflection at the slab bottom by repeated propagation over one
/// period, reseeding from the current `R` each time.
pub fn compute_bulk_reflection_proposed<S: Stepper + ?Sized>(
    evaluator: &PotentialEvaluator,
    gamma: &GammaMatrix,
    dz: f64,
    stepper: &S,
    threshold: f64,
) -> Result<CMatrix, SolverError> {
    let (_, samples) = bulk_samples(evaluator, dz, stepper.node_fractions())?;
    bulk_reflection_from_samples(&samples, gamma, stepper, threshold, evaluator.is_zero())
}

/// Bulk fixed point over one period of already sampled potential.
pub fn bulk_reflection_from_samples<S: Stepper + ?Sized>(
    samples: &PotentialSamples,
    gamma: &GammaMatrix,
    stepper: &S,
    threshold: f64,
    zero_potential: bool,
) -> Result<CMatrix, SolverError> {
    let plan = *samples.plan();
    let n = gamma.len();
    let mut r = CMatrix::zeros(n, n);
    if zero_potential {
        return Ok(r);
    }
    let mut change = f64::INFINITY;
    for _ in 0..BULK_MAX_PERIODS {
        let mut state = initial_state(gamma, &r, plan.start());
        propagate(samples, gamma, stepper, threshold, &mut state, |_, _| {})?;
        let next = reflection_from_state(&state, gamma, plan.steps())?;
        change = frobenius_norm(&(&next - &r));
        let scale = frobenius_norm(&next);
        r = next;
        if change <= BULK_TOLERANCE * scale {
            return Ok(r);
        }
    }
    Err(SolverError::BulkConvergence { periods: BULK_MAX_PERIODS, change })
}
