use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::coefficients::{srkn11, srkn6};
use super::PropagationState;
use crate::error::ConfigError;
use crate::kernels::{CMatrix, ONE, ZERO};
use crate::model::GammaMatrix;

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct StepWork {
    dq: CMatrix,
    dp: CMatrix,
    qs: CMatrix,
    ps: CMatrix,
    kp: CMatrix,
}

impl StepWork {
    pub fn new(n: usize) -> Self {
        let z = CMatrix::zeros(n, n);
        Self { dq: z.clone(), dp: z.clone(), qs: z.clone(), ps: z.clone(), kp: z }
    }
}

/// A single-step integrator for `Q' = P`, `P' = −M(z)·Q` with
/// `M = U + Γ²`.
pub trait Stepper: Send + Sync {
    /// Fractions of the step at which `M` is needed, in the order `step` reads them.
    fn node_fractions(&self) -> &[f64];

    /// Advance `state` by `h`; `m[r]` holds `M` at node `r`.
    fn step(&self, state: &mut PropagationState, h: f64, m: &[CMatrix], gamma: &GammaMatrix, work: &mut StepWork);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepperKind {
    Rk4,
    Sp4,
    Sp6,
}

impl fmt::Display for StepperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rk4 => "rk4",
            Self::Sp4 => "sp4",
            Self::Sp6 => "sp6",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplittingVariant {
    /// drift, kick, ..., drift
    Aba,
    /// kick, drift, ..., kick
    Bab,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Kick { weight: f64, node: usize },
    Drift { weight: f64 },
}

/// A kick–drift composition with its evaluation heights.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingScheme {
    variant: SplittingVariant,
    kick: Vec<f64>,
    drift: Vec<f64>,
    ops: Vec<Op>,
    nodes: Vec<f64>,
}

impl SplittingScheme {
    /// Kicks see the height reached by the drifts before them.
    pub fn new(variant: SplittingVariant, kick: Vec<f64>, drift: Vec<f64>) -> Result<Self, ConfigError> {
        let expected = match variant {
            SplittingVariant::Bab => drift.len() + 1,
            SplittingVariant::Aba => drift.len().saturating_sub(1),
        };
        if kick.is_empty() || drift.is_empty() || kick.len() != expected {
            return Err(ConfigError::Scheme(format!(
                "{:?} needs matching kick/drift counts, got {} and {}",
                variant,
                kick.len(),
                drift.len()
            )));
        }
        for (name, w) in [("kick", &kick), ("drift", &drift)] {
            let sum: f64 = w.iter().sum();
            if w.iter().any(|v| !v.is_finite()) || (sum - 1.0).abs() > 1e-13 {
                return Err(ConfigError::Scheme(format!("{name} weights sum to {sum}, not 1")));
            }
        }
        let mut ops = Vec::new();
        let mut nodes = Vec::new();
        let mut tau = 0.0;
        let push_kick = |ops: &mut Vec<Op>, nodes: &mut Vec<f64>, weight: f64, tau: f64| {
            ops.push(Op::Kick { weight, node: nodes.len() });
            nodes.push(tau);
        };
        match variant {
            SplittingVariant::Bab => {
                for (j, &b) in kick.iter().enumerate() {
                    let at = if j + 1 == kick.len() { 1.0 } else { tau };
                    push_kick(&mut ops, &mut nodes, b, at);
                    if let Some(&a) = drift.get(j) {
                        ops.push(Op::Drift { weight: a });
                        tau += a;
                    }
                }
            }
            SplittingVariant::Aba => {
                for (j, &a) in drift.iter().enumerate() {
                    ops.push(Op::Drift { weight: a });
                    tau += a;
                    if let Some(&b) = kick.get(j) {
                        push_kick(&mut ops, &mut nodes, b, tau);
                    }
                }
            }
        }
        if nodes.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(ConfigError::Scheme(format!("evaluation heights {nodes:?} leave the step")));
        }
        Ok(Self { variant, kick, drift, ops, nodes })
    }

    pub fn variant(&self) -> SplittingVariant {
        self.variant
    }

    pub fn kick_weights(&self) -> &[f64] {
        &self.kick
    }

    pub fn drift_weights(&self) -> &[f64] {
        &self.drift
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn apply(&self, state: &mut PropagationState, h: f64, m: &[CMatrix]) {
        for op in &self.ops {
            match *op {
                Op::Kick { weight, node } => {
                    state.p.gemm(Complex64::new(-h * weight, 0.0), &m[node], &state.q, ONE);
                }
                Op::Drift { weight } => {
                    add_scaled(&mut state.q, Complex64::new(h * weight, 0.0), &state.p);
                }
            }
        }
    }
}

/// `dst += a·src`
fn add_scaled(dst: &mut CMatrix, a: Complex64, src: &CMatrix) {
    dst.zip_apply(src, |d, s| *d += a * s);
}

/// Classical four-stage Runge–Kutta on the first-order system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rk4;

const RK4_NODES: [f64; 3] = [0.0, 0.5, 1.0];

impl Stepper for Rk4 {
    fn node_fractions(&self) -> &[f64] {
        &RK4_NODES
    }

    fn step(&self, state: &mut PropagationState, h: f64, m: &[CMatrix], _gamma: &GammaMatrix, w: &mut StepWork) {
        let c = |v: f64| Complex64::new(v, 0.0);
        let (q, p) = (&mut state.q, &mut state.p);
        // stage 1
        w.kp.gemm(c(-1.0), &m[0], q, ZERO);
        w.dq.copy_from(p);
        w.dq.scale_mut(h / 6.0);
        w.dp.copy_from(&w.kp);
        w.dp.scale_mut(h / 6.0);
        w.qs.copy_from(q);
        add_scaled(&mut w.qs, c(h / 2.0), p);
        w.ps.copy_from(p);
        add_scaled(&mut w.ps, c(h / 2.0), &w.kp);
        // stages 2 and 3 at the midpoint
        for (weight, advance) in [(h / 3.0, h / 2.0), (h / 3.0, h)] {
            w.kp.gemm(c(-1.0), &m[1], &w.qs, ZERO);
            add_scaled(&mut w.dq, c(weight), &w.ps);
            add_scaled(&mut w.dp, c(weight), &w.kp);
            w.qs.copy_from(q);
            add_scaled(&mut w.qs, c(advance), &w.ps);
            w.ps.copy_from(p);
            add_scaled(&mut w.ps, c(advance), &w.kp);
        }
        // stage 4
        w.kp.gemm(c(-1.0), &m[2], &w.qs, ZERO);
        add_scaled(&mut w.dq, c(h / 6.0), &w.ps);
        add_scaled(&mut w.dp, c(h / 6.0), &w.kp);
        *q += &w.dq;
        *p += &w.dp;
    }
}

impl Stepper for SplittingScheme {
    fn node_fractions(&self) -> &[f64] {
        &self.nodes
    }

    fn step(&self, state: &mut PropagationState, h: f64, m: &[CMatrix], _gamma: &GammaMatrix, _work: &mut StepWork) {
        self.apply(state, h, m);
    }
}

/// One of the built-in integrators.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperSpec {
    kind: StepperKind,
    scheme: Option<SplittingScheme>,
}

impl StepperSpec {
    pub fn rk4() -> Self {
        Self { kind: StepperKind::Rk4, scheme: None }
    }

    pub fn sp4() -> Result<Self, ConfigError> {
        Self::checked(StepperKind::Sp4)
    }

    pub fn sp6() -> Result<Self, ConfigError> {
        Self::checked(StepperKind::Sp6)
    }

    pub fn from_kind(kind: StepperKind) -> Result<Self, ConfigError> {
        match kind {
            StepperKind::Rk4 => Ok(Self::rk4()),
            other => Self::checked(other),
        }
    }

    fn checked(kind: StepperKind) -> Result<Self, ConfigError> {
        static SP4: OnceLock<Result<SplittingScheme, ConfigError>> = OnceLock::new();
        static SP6: OnceLock<Result<SplittingScheme, ConfigError>> = OnceLock::new();
        let (cell, order, (kick, drift)) = match kind {
            StepperKind::Sp4 => (&SP4, 4, srkn6()),
            StepperKind::Sp6 => (&SP6, 6, srkn11()),
            StepperKind::Rk4 => unreachable!(),
        };
        let scheme = cell
            .get_or_init(|| {
                let scheme = SplittingScheme::new(SplittingVariant::Bab, kick, drift)?;
                self_check(&scheme, order)?;
                Ok(scheme)
            })
            .clone()?;
        Ok(Self { kind, scheme: Some(scheme) })
    }

    pub fn kind(&self) -> StepperKind {
        self.kind
    }

    pub fn order(&self) -> u32 {
        match self.kind {
            StepperKind::Rk4 | StepperKind::Sp4 => 4,
            StepperKind::Sp6 => 6,
        }
    }

    pub fn scheme(&self) -> Option<&SplittingScheme> {
        self.scheme.as_ref()
    }
}

impl Stepper for StepperSpec {
    fn node_fractions(&self) -> &[f64] {
        match &self.scheme {
            Some(s) => s.node_fractions(),
            None => Rk4.node_fractions(),
        }
    }

    fn step(&self, state: &mut PropagationState, h: f64, m: &[CMatrix], gamma: &GammaMatrix, work: &mut StepWork) {
        match &self.scheme {
            Some(s) => s.step(state, h, m, gamma, work),
            None => Rk4.step(state, h, m, gamma, work),
        }
    }
}

/// Observed convergence order of a stepper on a scalar oscillator with a
/// height-dependent frequency, from three successive halvings.
pub fn empirical_order<S: Stepper + ?Sized>(stepper: &S) -> f64 {
    let frequency = |z: f64| 4.0 + (3.0 * z).cos() + 0.5 * (7.0 * z).sin();
    let gamma = scalar_gamma();
    let run = |h: f64, steps: usize| {
        let mut state = PropagationState {
            q: CMatrix::from_element(1, 1, ONE),
            p: CMatrix::from_element(1, 1, Complex64::new(0.3, 0.0)),
            z: 0.0,
        };
        let mut work = StepWork::new(1);
        let nodes = stepper.node_fractions();
        let mut m: Vec<CMatrix> = nodes.iter().map(|_| CMatrix::zeros(1, 1)).collect();
        for i in 0..steps {
            let z = i as f64 * h;
            for (slot, &c) in m.iter_mut().zip(nodes) {
                slot[(0, 0)] = Complex64::new(frequency(z + c * h), 0.0);
            }
            stepper.step(&mut state, h, &m, &gamma, &mut work);
        }
        (state.q[(0, 0)], state.p[(0, 0)])
    };
    let span = 4.0;
    let base = 40;
    let y: Vec<(Complex64, Complex64)> = (0..4).map(|k| run(span / (base << k) as f64, base << k)).collect();
    let gap = |a: (Complex64, Complex64), b: (Complex64, Complex64)| ((a.0 - b.0).norm_sqr() + (a.1 - b.1).norm_sqr()).sqrt();
    (gap(y[1], y[2]) / gap(y[2], y[3])).log2()
}

fn scalar_gamma() -> GammaMatrix {
    use crate::model::{build_gamma, BeamGeometry, Lattice, ReciprocalRodSet};
    let lat = Lattice::new([1.0, 0.0], [0.0, 1.0]).expect("unit lattice");
    let rods = ReciprocalRodSet::from_indices(lat, &[(0, 0)]).expect("single rod");
    let beam = BeamGeometry::new(1.0, 30.0, 0.0).expect("valid beam");
    build_gamma(&beam, &rods).expect("no grazing rods")
}

fn self_check(scheme: &SplittingScheme, order: u32) -> Result<(), ConfigError> {
    let observed = empirical_order(scheme);
    if (observed - order as f64).abs() > 0.5 {
        return Err(ConfigError::Scheme(format!("expected order {order}, observed {observed:.2}")));
    }
    Ok(())
}
