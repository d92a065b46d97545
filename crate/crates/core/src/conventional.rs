//! Multi-slice propagation with a piecewise-constant coefficient matrix and
//! recursive reflection matrices.

use crate::error::{ConfigError, SolverError};
use crate::kernels::{all_finite, frobenius_norm, matrix_exponential, CMatrix, CVector, LuFactor, I};
use crate::model::{GammaMatrix, PotentialEvaluator, PotentialSamples, SlicingPlan};

pub const BULK_TOLERANCE: f64 = 1e-12;
pub const BULK_MAX_PERIODS: usize = 10_000;

/// The four `n×n` blocks of `expm(h·A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferBlocks {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
    pub w: CMatrix,
}

/// Coefficient matrix of the slice with potential `u_mid`.
pub fn slice_coefficient(u_mid: &CMatrix, gamma: &GammaMatrix) -> CMatrix {
    let n = gamma.len();
    assert_eq!(u_mid.shape(), (n, n), "potential and Γ sizes differ");
    let g = gamma.diag();
    let mut a = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let scale = I * 0.5 / g[k];
        for j in 0..n {
            let v = u_mid[(j, k)] * scale;
            a[(j, k)] = v;
            a[(j, k + n)] = v;
            a[(j + n, k)] = -v;
            a[(j + n, k + n)] = -v;
        }
        a[(k, k)] += I * g[k];
        a[(k + n, k + n)] -= I * g[k];
    }
    a
}

pub fn slice_transfer(a: &CMatrix, h: f64) -> Result<TransferBlocks, SolverError> {
    let n = a.nrows() / 2;
    let e = matrix_exponential(&(a * num_complex::Complex64::new(h, 0.0))).map_err(|err| {
        SolverError::Breakdown { step: 0, reason: err.to_string(), recent_xi: Vec::new() }
    })?;
    Ok(TransferBlocks {
        x: e.view((0, 0), (n, n)).into_owned(),
        y: e.view((0, n), (n, n)).into_owned(),
        z: e.view((n, 0), (n, n)).into_owned(),
        w: e.view((n, n), (n, n)).into_owned(),
    })
}

/// `(Z + W·R)·(X + Y·R)⁻¹`.
pub fn reflect_update(blocks: &TransferBlocks, r_prev: &CMatrix) -> Result<CMatrix, SolverError> {
    let denominator = &blocks.x + &blocks.y * r_prev;
    let numerator = &blocks.z + &blocks.w * r_prev;
    let lu = LuFactor::new(denominator).map_err(|err| SolverError::Breakdown {
        step: 0,
        reason: format!("X + Y·R is singular: {err}"),
        recent_xi: Vec::new(),
    })?;
    Ok(lu.solve_right(&numerator))
}

fn at_step(err: SolverError, step: usize) -> SolverError {
    match err {
        SolverError::Breakdown { reason, recent_xi, .. } => SolverError::Breakdown { step, reason, recent_xi },
        other => other,
    }
}

/// Midpoint-sampled potential for a plan, as the conventional method needs it.
pub fn midpoint_samples(
    evaluator: &PotentialEvaluator,
    plan: SlicingPlan,
    budget: usize,
) -> Result<PotentialSamples, SolverError> {
    PotentialSamples::new(evaluator, plan, &[0.5], budget)
}

/// Run the recursion over every slice, calling `observe(i, R_i)` after each.
pub fn propagate_reflection<F>(
    samples: &PotentialSamples,
    gamma: &GammaMatrix,
    r_init: &CMatrix,
    mut observe: F,
) -> Result<CMatrix, SolverError>
where
    F: FnMut(usize, &CMatrix),
{
    let n = gamma.len();
    let plan = samples.plan();
    let h = plan.step_size();
    let mut u = CMatrix::zeros(n, n);
    let mut r = r_init.clone();
    for step in 0..plan.steps() {
        samples.load_into(step, 0, &mut u)?;
        let a = slice_coefficient(&u, gamma);
        let blocks = slice_transfer(&a, h).map_err(|e| at_step(e, step))?;
        r = reflect_update(&blocks, &r).map_err(|e| at_step(e, step))?;
        if !all_finite(&r) {
            return Err(SolverError::Breakdown {
                step,
                reason: "reflection matrix is not finite".into(),
                recent_xi: Vec::new(),
            });
        }
        observe(step, &r);
    }
    Ok(r)
}

/// `ρ(0)` for a unit incident wave on the zero rod.
pub fn solve_conventional(
    samples: &PotentialSamples,
    gamma: &GammaMatrix,
    r_init: &CMatrix,
) -> Result<CVector, SolverError> {
    let r = propagate_reflection(samples, gamma, r_init, |_, _| {})?;
    Ok(r.column(0).into_owned())
}

/// Periodic continuation below the slab, iterated from `R = 0` until it
/// stops changing. Returns the reflection matrix at the slab bottom.
pub fn compute_bulk_reflection_conventional(
    evaluator: &PotentialEvaluator,
    gamma: &GammaMatrix,
    dz: f64,
) -> Result<CMatrix, SolverError> {
    let (_, samples) = bulk_samples(evaluator, dz, &[0.5])?;
    bulk_reflection_from_samples(&samples, gamma, evaluator.is_zero())
}

/// Bulk fixed point over one period of already sampled potential.
pub fn bulk_reflection_from_samples(
    samples: &PotentialSamples,
    gamma: &GammaMatrix,
    zero_potential: bool,
) -> Result<CMatrix, SolverError> {
    let n = gamma.len();
    let mut r = CMatrix::zeros(n, n);
    if zero_potential {
        return Ok(r);
    }
    let mut change = f64::INFINITY;
    for _ in 0..BULK_MAX_PERIODS {
        let next = propagate_reflection(samples, gamma, &r, |_, _| {})?;
        change = frobenius_norm(&(&next - &r));
        let scale = frobenius_norm(&next);
        r = next;
        if change <= BULK_TOLERANCE * scale {
            return Ok(r);
        }
    }
    Err(SolverError::BulkConvergence { periods: BULK_MAX_PERIODS, change })
}

/// Plan and samples over one bulk period `[z_e, z_e + P]`.
pub(crate) fn bulk_samples(
    evaluator: &PotentialEvaluator,
    dz: f64,
    fractions: &[f64],
) -> Result<(SlicingPlan, PotentialSamples), SolverError> {
    let field = evaluator.field();
    let period = field.bulk_period().ok_or(ConfigError::NoBulkPeriod)?;
    if !evaluator.is_zero() && !field.is_absorbing() {
        return Err(ConfigError::BulkWithoutAbsorption.into());
    }
    let bottom = field.bottom();
    let plan = SlicingPlan::new(bottom, (bottom + period).min(0.0), dz)?;
    let samples = PotentialSamples::new(evaluator, plan, fractions, usize::MAX)?;
    Ok((plan, samples))
}

/// Reflection from the product of all slice transfers, `Ẑ·X̂⁻¹` of
/// `Â_{L−1}⋯Â_0`.
///
/// Loses all precision once evanescent rods grow across the domain, so it
/// only serves to cross-check the recursion on very short domains.
pub fn full_product_reflection(samples: &PotentialSamples, gamma: &GammaMatrix) -> Result<CVector, SolverError> {
    let n = gamma.len();
    let plan = samples.plan();
    let h = plan.step_size();
    let mut u = CMatrix::zeros(n, n);
    let mut product = CMatrix::identity(2 * n, 2 * n);
    for step in 0..plan.steps() {
        samples.load_into(step, 0, &mut u)?;
        let a = slice_coefficient(&u, gamma);
        let e = matrix_exponential(&(a * num_complex::Complex64::new(h, 0.0))).map_err(|err| {
            SolverError::Breakdown { step, reason: err.to_string(), recent_xi: Vec::new() }
        })?;
        product = e * product;
    }
    let x = product.view((0, 0), (n, n)).into_owned();
    let z = product.view((n, 0), (n, n)).into_owned();
    let lu = LuFactor::new(x).map_err(|err| SolverError::Breakdown {
        step: plan.steps(),
        reason: format!("transfer product is singular: {err}"),
        recent_xi: Vec::new(),
    })?;
    Ok(lu.solve_right(&z).column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ZERO;
    use crate::model::{
        build_gamma, BeamGeometry, GaussianLayer, Lattice, PotentialField, PotentialModel,
        ReciprocalRodSet, TabulatedPotential,
    };
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn scalar_gamma(g: f64) -> GammaMatrix {
        let lat = Lattice::new([1.0, 0.0], [0.0, 1.0]).unwrap();
        let rods = ReciprocalRodSet::from_indices(lat, &[(0, 0)]).unwrap();
        // γ sin θ0 = g with γ = 10
        let beam = BeamGeometry::new(10.0, (g / 10.0).asin().to_degrees(), 0.0).unwrap();
        build_gamma(&beam, &rods).unwrap()
    }

    fn setup() -> (ReciprocalRodSet, GammaMatrix, PotentialEvaluator) {
        let lat = Lattice::new([4.0, 0.0], [0.0, 5.0]).unwrap();
        let rods = ReciprocalRodSet::within_cutoff(lat, 2.6).unwrap();
        let beam = BeamGeometry::new(20.0, 2.3, 7.0).unwrap();
        let gamma = build_gamma(&beam, &rods).unwrap();
        let layers = vec![
            GaussianLayer { z_center: -0.8, amplitude: 2.5, lateral_width: 1.5, depth_width: 0.6, absorption: 0.1 },
            GaussianLayer { z_center: -2.6, amplitude: 2.5, lateral_width: 1.5, depth_width: 0.6, absorption: 0.1 },
        ];
        let field = PotentialField::new(PotentialModel::GaussianLayers(layers), -4.0, Some(1.8)).unwrap();
        let ev = field.bind(&rods).unwrap();
        (rods, gamma, ev)
    }

    fn step_field(u: Complex64, bottom: f64, period: Option<f64>) -> PotentialEvaluator {
        let lat = Lattice::new([1.0, 0.0], [0.0, 1.0]).unwrap();
        let rods = ReciprocalRodSet::from_indices(lat, &[(0, 0)]).unwrap();
        let mut values = BTreeMap::new();
        values.insert((0, 0), u);
        let table = TabulatedPotential::constant(bottom, 0.0, values).unwrap();
        PotentialField::new(PotentialModel::Tabulated(table), bottom, period).unwrap().bind(&rods).unwrap()
    }

    fn fresnel(g: f64, u: Complex64) -> Complex64 {
        let mut kappa = (Complex64::new(g * g, 0.0) + u).sqrt();
        if kappa.im > 0.0 {
            kappa = -kappa;
        }
        (g - kappa) / (g + kappa)
    }

    #[test]
    fn zero_potential_coefficient_is_block_diagonal() {
        let (_, gamma, _) = setup();
        let n = gamma.len();
        let a = slice_coefficient(&CMatrix::zeros(n, n), &gamma);
        for j in 0..2 * n {
            for k in 0..2 * n {
                let expected = if j != k {
                    ZERO
                } else if j < n {
                    I * gamma.diag()[j]
                } else {
                    -I * gamma.diag()[j - n]
                };
                assert_eq!(a[(j, k)], expected);
            }
        }
    }

    #[test]
    fn scalar_coefficient() {
        let gamma = scalar_gamma(0.7);
        let g = gamma.diag()[0];
        let u = Complex64::new(-1.3, -0.2);
        let a = slice_coefficient(&CMatrix::from_element(1, 1, u), &gamma);
        let s = I * u / (2.0 * g);
        let expected = [[s + I * g, s], [-s, -s - I * g]];
        for j in 0..2 {
            for k in 0..2 {
                assert!((a[(j, k)] - expected[j][k]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn coefficient_is_conjugated_ode_matrix() {
        // A = S·B·S⁻¹ with B = [[0, I], [−(U + Γ²), 0]]
        let (_, gamma, ev) = setup();
        let n = gamma.len();
        let u = ev.evaluate(-1.1).unwrap();
        let a = slice_coefficient(&u, &gamma);
        let g = CMatrix::from_diagonal(&CVector::from_vec(gamma.diag().to_vec()));
        let id = CMatrix::identity(n, n);
        let mut s = CMatrix::zeros(2 * n, 2 * n);
        s.view_mut((0, 0), (n, n)).copy_from(&g);
        s.view_mut((0, n), (n, n)).copy_from(&(&id * -I));
        s.view_mut((n, 0), (n, n)).copy_from(&g);
        s.view_mut((n, n), (n, n)).copy_from(&(&id * I));
        let mut b = CMatrix::zeros(2 * n, 2 * n);
        b.view_mut((0, n), (n, n)).copy_from(&id);
        let m = &u + CMatrix::from_diagonal(&CVector::from_vec(gamma.squared().iter().map(|&v| Complex64::new(v, 0.0)).collect()));
        b.view_mut((n, 0), (n, n)).copy_from(&-m);
        let lhs = &a * &s;
        let rhs = &s * &b;
        assert!(frobenius_norm(&(lhs - &rhs)) < 1e-12 * frobenius_norm(&rhs));
    }

    #[test]
    fn zero_potential_transfer() {
        let (_, gamma, _) = setup();
        let n = gamma.len();
        let h = 0.37;
        let blocks = slice_transfer(&slice_coefficient(&CMatrix::zeros(n, n), &gamma), h).unwrap();
        for j in 0..n {
            for k in 0..n {
                let g = gamma.diag()[j];
                let (x, w) = if j == k { ((I * g * h).exp(), (-I * g * h).exp()) } else { (ZERO, ZERO) };
                assert!((blocks.x[(j, k)] - x).norm() < 1e-13 * x.norm().max(1.0));
                assert!((blocks.w[(j, k)] - w).norm() < 1e-13 * w.norm().max(1.0));
                assert_eq!(blocks.y[(j, k)], ZERO);
                assert_eq!(blocks.z[(j, k)], ZERO);
            }
        }
    }

    #[test]
    fn transfer_tends_to_identity() {
        let (_, gamma, ev) = setup();
        let a = slice_coefficient(&ev.evaluate(-0.5).unwrap(), &gamma);
        let blocks = slice_transfer(&a, 1e-14).unwrap();
        let n = gamma.len();
        let id = CMatrix::identity(n, n);
        assert!(frobenius_norm(&(&blocks.x - &id)) < 1e-11);
        assert!(frobenius_norm(&(&blocks.w - &id)) < 1e-11);
        assert!(frobenius_norm(&blocks.y) < 1e-11);
    }

    #[test]
    fn transfer_group_property() {
        let (_, gamma, ev) = setup();
        let a = slice_coefficient(&ev.evaluate(-0.9).unwrap(), &gamma);
        let h = 0.05;
        let one = matrix_exponential(&(&a * Complex64::new(h, 0.0))).unwrap();
        let two = matrix_exponential(&(&a * Complex64::new(2.0 * h, 0.0))).unwrap();
        let squared = &one * &one;
        assert!(frobenius_norm(&(&two - &squared)) < 1e-11 * frobenius_norm(&two));
    }

    #[test]
    fn reflect_update_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let blocks = TransferBlocks {
            x: random_matrix(&mut rng, n) + CMatrix::identity(n, n) * Complex64::new(3.0, 0.0),
            y: random_matrix(&mut rng, n),
            z: random_matrix(&mut rng, n),
            w: random_matrix(&mut rng, n),
        };
        let r = reflect_update(&blocks, &CMatrix::zeros(n, n)).unwrap();
        let expected = crate::kernels::solve_right(&blocks.z, &blocks.x).unwrap();
        assert!(frobenius_norm(&(r - expected)) < 1e-13);

        let identity = TransferBlocks {
            x: CMatrix::identity(n, n),
            y: CMatrix::zeros(n, n),
            z: CMatrix::zeros(n, n),
            w: CMatrix::identity(n, n),
        };
        let prev = random_matrix(&mut rng, n);
        assert!(frobenius_norm(&(reflect_update(&identity, &prev).unwrap() - &prev)) < 1e-14);

        let singular = TransferBlocks { x: CMatrix::zeros(n, n), ..identity };
        assert!(matches!(
            reflect_update(&singular, &CMatrix::zeros(n, n)),
            Err(SolverError::Breakdown { .. })
        ));
    }

    #[test]
    fn free_slice_update_is_phase_conjugation() {
        let (_, gamma, _) = setup();
        let n = gamma.len();
        let h = 0.21;
        let blocks = slice_transfer(&slice_coefficient(&CMatrix::zeros(n, n), &gamma), h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let prev = random_matrix(&mut rng, n) * Complex64::new(0.1, 0.0);
        let next = reflect_update(&blocks, &prev).unwrap();
        for j in 0..n {
            for k in 0..n {
                let phase = (-I * h * (gamma.diag()[j] + gamma.diag()[k])).exp();
                let expected = phase * prev[(j, k)];
                assert!((next[(j, k)] - expected).norm() < 1e-12 * (1.0 + expected.norm()));
            }
        }
    }

    #[test]
    fn zero_potential_reflects_nothing() {
        let (rods, gamma, _) = setup();
        let ev = PotentialField::zero(-4.0).unwrap().bind(&rods).unwrap();
        let plan = SlicingPlan::new(-4.0, 0.0, 0.1).unwrap();
        let samples = midpoint_samples(&ev, plan, usize::MAX).unwrap();
        let rho = solve_conventional(&samples, &gamma, &CMatrix::zeros(rods.len(), rods.len())).unwrap();
        assert!(rho.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn fresnel_total_reflection() {
        let g = 1.0;
        let gamma = scalar_gamma(g);
        let u = Complex64::new(-4.0, 0.0);
        let ev = step_field(u, -10.0, None);
        let plan = SlicingPlan::new(-10.0, 0.0, 0.01).unwrap();
        let samples = midpoint_samples(&ev, plan, usize::MAX).unwrap();
        let rho = solve_conventional(&samples, &gamma, &CMatrix::zeros(1, 1)).unwrap();
        let expected = fresnel(g, u);
        assert!((expected.norm() - 1.0).abs() < 1e-15);
        assert!((rho[0] - expected).norm() < 1e-12, "{} vs {expected}", rho[0]);
    }

    #[test]
    fn fresnel_coefficient_is_invariant_in_uniform_medium() {
        let g = 1.0;
        let gamma = scalar_gamma(g);
        for &u in &[Complex64::new(-0.5, -0.05), Complex64::new(1.5, -0.2), Complex64::new(0.8, 0.0)] {
            let ev = step_field(u, -3.0, None);
            let plan = SlicingPlan::new(-3.0, 0.0, 0.1).unwrap();
            let samples = midpoint_samples(&ev, plan, usize::MAX).unwrap();
            let expected = fresnel(g, u);
            let rho = solve_conventional(&samples, &gamma, &CMatrix::from_element(1, 1, expected)).unwrap();
            assert!((rho[0] - expected).norm() < 1e-12, "{u}: {} vs {expected}", rho[0]);
        }
    }

    #[test]
    fn absorbing_bulk_matches_fresnel() {
        let g = 1.0;
        let gamma = scalar_gamma(g);
        for &u in &[Complex64::new(-0.5, -0.05), Complex64::new(1.5, -0.2), Complex64::new(-3.0, -0.1)] {
            let ev = step_field(u, -2.0, Some(1.0));
            let r = compute_bulk_reflection_conventional(&ev, &gamma, 0.05).unwrap();
            let expected = fresnel(g, u);
            assert!((r[(0, 0)] - expected).norm() < 1e-8, "{u}: {} vs {expected}", r[(0, 0)]);
        }
    }

    #[test]
    fn bulk_requirements() {
        let (rods, gamma, ev) = setup();
        assert!(compute_bulk_reflection_conventional(&ev, &gamma, 0.1).is_ok());
        let zero = PotentialField::new(PotentialModel::Zero, -4.0, Some(2.0)).unwrap().bind(&rods).unwrap();
        let r = compute_bulk_reflection_conventional(&zero, &gamma, 0.1).unwrap();
        assert!(r.iter().all(|v| *v == ZERO));
        let no_period = PotentialField::zero(-4.0).unwrap().bind(&rods).unwrap();
        assert!(matches!(
            compute_bulk_reflection_conventional(&no_period, &gamma, 0.1),
            Err(SolverError::Config(ConfigError::NoBulkPeriod))
        ));
        let lossless = step_field(Complex64::new(1.0, 0.0), -2.0, Some(1.0));
        assert!(matches!(
            compute_bulk_reflection_conventional(&lossless, &scalar_gamma(1.0), 0.1),
            Err(SolverError::Config(ConfigError::BulkWithoutAbsorption))
        ));
    }

    #[test]
    fn full_product_agrees_on_short_domain() {
        let (rods, gamma, _) = setup();
        let layer = GaussianLayer { z_center: -0.4, amplitude: 2.0, lateral_width: 1.5, depth_width: 0.3, absorption: 0.1 };
        let ev = PotentialField::new(PotentialModel::GaussianLayers(vec![layer]), -1.0, None)
            .unwrap()
            .bind(&rods)
            .unwrap();
        let plan = SlicingPlan::new(-1.0, 0.0, 0.05).unwrap();
        let samples = midpoint_samples(&ev, plan, usize::MAX).unwrap();
        let n = rods.len();
        let recursive = solve_conventional(&samples, &gamma, &CMatrix::zeros(n, n)).unwrap();
        let product = full_product_reflection(&samples, &gamma).unwrap();
        let diff = (&recursive - &product).norm();
        assert!(diff < 1e-9 * recursive.norm().max(1e-3), "{diff}");
    }

    #[test]
    fn second_order_convergence() {
        let (_, gamma, ev) = setup();
        let n = gamma.len();
        let solve = |dz: f64| {
            let plan = SlicingPlan::new(-4.0, 0.0, dz).unwrap();
            let samples = midpoint_samples(&ev, plan, usize::MAX).unwrap();
            solve_conventional(&samples, &gamma, &CMatrix::zeros(n, n)).unwrap()
        };
        let reference = solve(0.0025);
        let e1 = (solve(0.04) - &reference).norm();
        let e2 = (solve(0.02) - &reference).norm();
        let slope = (e1 / e2).log2();
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }

    proptest! {
        #[test]
        fn coefficient_is_traceless(seed in 0u64..1000, n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_matrix(&mut rng, n);
            let lat = Lattice::new([4.0, 0.0], [0.0, 5.0]).unwrap();
            let indices: Vec<(i32, i32)> = (0..n as i32).map(|i| (i, 0)).collect();
            let rods = ReciprocalRodSet::from_indices(lat, &indices).unwrap();
            let beam = BeamGeometry::new(30.0, rng.random_range(0.5..5.0), 0.0).unwrap();
            if let Ok(gamma) = build_gamma(&beam, &rods) {
                let a = slice_coefficient(&u, &gamma);
                prop_assert!(a.trace().norm() < 1e-12 * (1.0 + frobenius_norm(&a)));
            }
        }
    }
}
