use proptest::prelude::*;
use refdiff_core::model::{GaussianLayer, Lattice, PotentialField, PotentialModel, ReciprocalRodSet};
use refdiff_core::solver::{Method, PreparedProblem, Problem, SolverConfig};

fn problem(absorption: f64, amplitude: f64) -> Problem {
    let lattice = Lattice::new([4.0, 0.0], [0.0, 5.0]).unwrap();
    let layers = [-0.8, -2.6, -4.4]
        .iter()
        .map(|&z_center| GaussianLayer { z_center, amplitude, lateral_width: 1.5, depth_width: 0.6, absorption })
        .collect();
    Problem {
        rods: ReciprocalRodSet::within_cutoff(lattice, 2.6).unwrap(),
        gamma: 20.0,
        field: PotentialField::new(PotentialModel::GaussianLayers(layers), -5.0, None).unwrap(),
    }
}

/// Upward flux of the reflected rods relative to the incident one. The
/// reflected amplitude in rod i is `ρ_i g_0 / g_i`.
fn reflected_flux(prepared: &PreparedProblem, theta0: f64, theta1: f64) -> f64 {
    let (_, gamma) = prepared.gamma_matrix(theta0, theta1).unwrap();
    let rho = prepared.solve_angle(theta0, theta1).unwrap().rho;
    let g = gamma.diag();
    (0..rho.len()).filter(|&i| gamma.is_propagating(i)).map(|i| rho[i].norm_sqr() * g[0].re / g[i].re).sum()
}

#[test]
fn weak_slab_reflects_quadratically() {
    let solve = |amplitude| {
        let prepared = PreparedProblem::new(problem(0.0, amplitude), SolverConfig::new(Method::Sp6, 0.05)).unwrap();
        [1.0, 3.0, 6.0].map(|theta0| reflected_flux(&prepared, theta0, 0.0))
    };
    let (small, large) = (solve(1e-3), solve(2e-3));
    for (a, b) in small.iter().zip(&large) {
        assert!(*a > 0.0 && (b / a - 4.0).abs() < 0.05, "{a} {b}");
    }
}

#[test]
fn total_external_reflection_near_grazing() {
    let prepared = PreparedProblem::new(problem(0.0, -2.5), SolverConfig::new(Method::Sp6, 0.02)).unwrap();
    let flux = reflected_flux(&prepared, 0.3, 0.0);
    assert!(flux > 0.5 && flux <= 1.0 + 1e-8, "flux {flux}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reflected_flux_never_exceeds_incident(
        theta0 in 0.2f64..8.0,
        theta1 in 0.0f64..90.0,
        absorption in 0.0f64..0.5,
        amplitude in -3.0f64..3.0,
        method in 0usize..4,
    ) {
        let config = SolverConfig::new(Method::ALL[method], 0.02);
        let prepared = PreparedProblem::new(problem(absorption, amplitude), config).unwrap();
        let flux = reflected_flux(&prepared, theta0, theta1);
        prop_assert!(flux <= 1.0 + 1e-8, "flux {}", flux);
    }
}
