use super::potential::PotentialEvaluator;
use crate::error::{ConfigError, SolverError};
use crate::kernels::CMatrix;

/// Uniform partition of `[start, end]` into `L` steps of width `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicingPlan {
    start: f64,
    end: f64,
    steps: usize,
}

impl SlicingPlan {
    /// `L = max(1, round(|end − start| / dz))`, so the realised step is close to `dz`.
    pub fn new(start: f64, end: f64, dz: f64) -> Result<Self, ConfigError> {
        if !(dz > 0.0) || !dz.is_finite() {
            return Err(ConfigError::StepSize(dz));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(ConfigError::DomainBottom(start));
        }
        let steps = ((end - start) / dz).round().max(1.0);
        if steps > u32::MAX as f64 {
            return Err(ConfigError::StepSize(dz));
        }
        Ok(Self { start, end, steps: steps as usize })
    }

    pub fn with_steps(start: f64, end: f64, steps: usize) -> Result<Self, ConfigError> {
        if steps == 0 {
            return Err(ConfigError::SliceCount);
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(ConfigError::DomainBottom(start));
        }
        Ok(Self { start, end, steps })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> f64 {
        (self.end - self.start) / self.steps as f64
    }

    /// `z_i`; `point(0) == start` and `point(L) == end` exactly.
    pub fn point(&self, i: usize) -> f64 {
        if i >= self.steps {
            return self.end;
        }
        self.start + (self.end - self.start) * (i as f64 / self.steps as f64)
    }

    /// Height at fraction `c` of step `i`.
    pub fn node(&self, i: usize, c: f64) -> f64 {
        if c == 0.0 {
            self.point(i)
        } else if c == 1.0 {
            self.point(i + 1)
        } else {
            self.point(i) + c * self.step_size()
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.node(i, 0.5)
    }
}

/// Default memory budget for precomputed potential tables.
pub const TABLE_BUDGET_BYTES: usize = 256 << 20;

/// Source of `U` at the nodes a stepper needs in each step.
#[derive(Debug, Clone)]
pub enum PotentialSamples {
    /// precomputed once and shared read-only
    Table(PotentialTable),
    /// evaluated whenever requested
    OnTheFly {
        evaluator: PotentialEvaluator,
        plan: SlicingPlan,
        fractions: Vec<f64>,
    },
}

impl PotentialSamples {
    /// A table when it fits in `budget` bytes, otherwise on-the-fly sampling.
    pub fn new(
        evaluator: &PotentialEvaluator,
        plan: SlicingPlan,
        fractions: &[f64],
        budget: usize,
    ) -> Result<Self, SolverError> {
        validate_fractions(fractions)?;
        let n = evaluator.dim();
        let per_matrix = n * n * std::mem::size_of::<num_complex::Complex64>();
        let count = plan.steps().saturating_mul(fractions.len());
        if evaluator.is_zero() || count.saturating_mul(per_matrix) <= budget {
            Ok(Self::Table(PotentialTable::new(evaluator, plan, fractions)?))
        } else {
            Ok(Self::OnTheFly { evaluator: evaluator.clone(), plan, fractions: fractions.to_vec() })
        }
    }

    pub fn plan(&self) -> &SlicingPlan {
        match self {
            Self::Table(t) => &t.plan,
            Self::OnTheFly { plan, .. } => plan,
        }
    }

    pub fn fractions(&self) -> &[f64] {
        match self {
            Self::Table(t) => &t.fractions,
            Self::OnTheFly { fractions, .. } => fractions,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Table(t) => t.dim,
            Self::OnTheFly { evaluator, .. } => evaluator.dim(),
        }
    }

    /// Copy `U` at node `node` of step `step` into `out`.
    pub fn load_into(&self, step: usize, node: usize, out: &mut CMatrix) -> Result<(), SolverError> {
        match self {
            Self::Table(t) => {
                out.copy_from(t.get(step, node));
                Ok(())
            }
            Self::OnTheFly { evaluator, plan, fractions } => {
                evaluator.evaluate_into(plan.node(step, fractions[node]), out)
            }
        }
    }
}

fn validate_fractions(fractions: &[f64]) -> Result<(), ConfigError> {
    if fractions.is_empty() || fractions.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(ConfigError::Scheme(format!("node fractions {fractions:?} must lie in [0, 1]")));
    }
    Ok(())
}

/// `U` at each node of each step, with coincident heights stored once.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    plan: SlicingPlan,
    fractions: Vec<f64>,
    dim: usize,
    matrices: Vec<CMatrix>,
    index: Vec<usize>,
}

impl PotentialTable {
    pub fn new(evaluator: &PotentialEvaluator, plan: SlicingPlan, fractions: &[f64]) -> Result<Self, SolverError> {
        validate_fractions(fractions)?;
        let m = fractions.len();
        let n = evaluator.dim();
        let zero_node = fractions.iter().position(|&c| c == 0.0);
        let one_node = fractions.iter().position(|&c| c == 1.0);
        // fractions repeated within a step also share storage
        let first_of: Vec<usize> = fractions
            .iter()
            .map(|c| fractions.iter().position(|d| d == c).unwrap())
            .collect();

        let mut matrices = Vec::new();
        let mut index = Vec::with_capacity(plan.steps() * m);
        let shared_zero = evaluator.is_zero();
        if shared_zero {
            matrices.push(CMatrix::zeros(n, n));
        }
        let mut previous_one: Option<usize> = None;
        for step in 0..plan.steps() {
            let base = index.len();
            let mut current_one = None;
            for node in 0..m {
                let reuse = previous_one.filter(|_| Some(node) == zero_node);
                let slot = if shared_zero {
                    0
                } else if first_of[node] != node {
                    index[base + first_of[node]]
                } else if let Some(shared) = reuse {
                    shared
                } else {
                    matrices.push(evaluator.evaluate(plan.node(step, fractions[node]))?);
                    matrices.len() - 1
                };
                if Some(node) == one_node {
                    current_one = Some(slot);
                }
                index.push(slot);
            }
            previous_one = current_one;
        }
        Ok(Self { plan, fractions: fractions.to_vec(), dim: n, matrices, index })
    }

    pub fn get(&self, step: usize, node: usize) -> &CMatrix {
        &self.matrices[self.index[step * self.fractions.len() + node]]
    }

    /// Number of distinct matrices held.
    pub fn stored(&self) -> usize {
        self.matrices.len()
    }
}
