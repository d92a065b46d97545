use num_complex::Complex64;

use super::lattice::{norm, ReciprocalRodSet, Vec2};
use crate::error::ConfigError;

/// Rods whose `γ² − |b0 + k|²` falls below this magnitude are rejected.
pub const GRAZING_TOLERANCE: f64 = 1e-12;

/// In-plane projection of the incident wavevector.
pub fn project_incident(gamma: f64, theta0_deg: f64, theta1_deg: f64) -> Result<Vec2, ConfigError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(ConfigError::Wavenumber(gamma));
    }
    if !(theta0_deg > 0.0 && theta0_deg < 90.0) {
        return Err(ConfigError::GlancingAngle(theta0_deg));
    }
    if !theta1_deg.is_finite() {
        return Err(ConfigError::Azimuth(theta1_deg));
    }
    let radial = gamma * theta0_deg.to_radians().cos();
    let phi = theta1_deg.to_radians();
    Ok([radial * phi.cos(), radial * phi.sin()])
}

/// Incident beam: vacuum wavenumber, glancing angle, azimuth and projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub gamma: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub b0: Vec2,
}

impl BeamGeometry {
    pub fn new(gamma: f64, theta0: f64, theta1: f64) -> Result<Self, ConfigError> {
        let b0 = project_incident(gamma, theta0, theta1)?;
        Ok(Self { gamma, theta0, theta1, b0 })
    }

    pub fn sin_theta0(&self) -> f64 {
        self.theta0.to_radians().sin()
    }

    /// `γ² − |b0 + k|²` for an in-plane vector `k`.
    pub fn perpendicular_sq(&self, k: Vec2) -> f64 {
        let s = [self.b0[0] + k[0], self.b0[1] + k[1]];
        // (γ - |s|)(γ + |s|) keeps precision near grazing
        let m = norm(s);
        (self.gamma - m) * (self.gamma + m)
    }
}

/// Diagonal of Γ: `sqrt(γ² − |b0 + k_j|²)`.
///
/// Propagating rods take the positive root. Evanescent rods take
/// `−i·sqrt(|b0 + k_j|² − γ²)`, so the reflected component `e^{−iΓz}`
/// decays above the surface and the transmitted one decays below the slab.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    diag: Vec<Complex64>,
    squared: Vec<f64>,
}

/// Build Γ for a beam and rod set.
pub fn build_gamma(beam: &BeamGeometry, rods: &ReciprocalRodSet) -> Result<GammaMatrix, ConfigError> {
    let mut diag = Vec::with_capacity(rods.len());
    let mut squared = Vec::with_capacity(rods.len());
    for (j, rod) in rods.rods().iter().enumerate() {
        if j == 0 {
            // |b0| = γ cos θ0 exactly, so the zero rod is γ sin θ0
            let g = beam.gamma * beam.sin_theta0();
            diag.push(Complex64::new(g, 0.0));
            squared.push(g * g);
            continue;
        }
        let value = beam.perpendicular_sq(rod.k);
        if value.abs() < GRAZING_TOLERANCE {
            return Err(ConfigError::GrazingRod {
                m1: rod.index.0,
                m2: rod.index.1,
                value,
            });
        }
        let root = if value > 0.0 {
            Complex64::new(value.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, -(-value).sqrt())
        };
        diag.push(root);
        squared.push(value);
    }
    Ok(GammaMatrix { diag, squared })
}

impl GammaMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    /// `Γ²` entries, always real.
    pub fn squared(&self) -> &[f64] {
        &self.squared
    }

    pub fn is_propagating(&self, j: usize) -> bool {
        self.squared[j] > 0.0
    }
}
