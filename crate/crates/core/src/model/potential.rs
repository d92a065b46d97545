//! Fourier coefficients `u(Δk, z)` of the crystal potential and the
//! matrices `U(z)` with `U_jk = u(k_j − k_k, z)` built from them.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::lattice::{norm, ReciprocalRodSet, Vec2};
use crate::error::{ConfigError, SolverError};
use crate::kernels::{CMatrix, ZERO};

/// Slack allowed when checking that a height lies inside the domain (Å).
pub const DOMAIN_SLACK: f64 = 1e-9;

/// A sheet of scattering density with Gaussian profiles across and along z.
///
/// Contributes `(A − i·α·|A|) · exp(−|Δk|²/(2σ_xy²)) · exp(−(z − z_c)²/(2σ_z²))`
/// to every coefficient. The imaginary part is absorbing for `α > 0`
/// regardless of the sign of `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLayer {
    pub z_center: f64,
    /// Å⁻²
    pub amplitude: f64,
    /// Å⁻¹
    pub lateral_width: f64,
    /// Å
    pub depth_width: f64,
    pub absorption: f64,
}

impl GaussianLayer {
    fn validate(&self, index: usize) -> Result<(), ConfigError> {
        let fail = |reason| Err(ConfigError::Layer { index, reason });
        if !self.z_center.is_finite() || !self.amplitude.is_finite() {
            return fail("center and amplitude must be finite");
        }
        if !(self.lateral_width > 0.0) || !self.lateral_width.is_finite() {
            return fail("lateral width must be positive");
        }
        if !(self.depth_width > 0.0) || !self.depth_width.is_finite() {
            return fail("depth width must be positive");
        }
        if !(self.absorption >= 0.0) || !self.absorption.is_finite() {
            return fail("absorption must be non-negative");
        }
        Ok(())
    }

    pub fn strength(&self) -> Complex64 {
        Complex64::new(self.amplitude, -self.absorption * self.amplitude.abs())
    }

    pub fn lateral(&self, dk: Vec2) -> f64 {
        let s = norm(dk) / self.lateral_width;
        (-0.5 * s * s).exp()
    }

    pub fn depth(&self, z: f64) -> f64 {
        let s = (z - self.z_center) / self.depth_width;
        (-0.5 * s * s).exp()
    }

    pub fn coefficient(&self, dk: Vec2, z: f64) -> Complex64 {
        self.strength() * (self.lateral(dk) * self.depth(z))
    }
}

/// Coefficients sampled on a z-grid, interpolated by natural cubic splines.
///
/// Interpolation limits the smoothness of `U(z)` to C², so integrators of
/// order above three will not show their full order on tabulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    z: Vec<f64>,
    series: BTreeMap<(i32, i32), Spline>,
}

#[derive(Debug, Clone, PartialEq)]
struct Spline {
    values: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl TabulatedPotential {
    /// `samples` maps a rod-difference index `(Δm1, Δm2)` to values on `z`.
    pub fn new(z: Vec<f64>, samples: BTreeMap<(i32, i32), Vec<Complex64>>) -> Result<Self, ConfigError> {
        if z.len() < 2 {
            return Err(ConfigError::Tabulated("need at least two grid points".into()));
        }
        if z.iter().any(|v| !v.is_finite()) || z.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ConfigError::Tabulated("z grid must be finite and strictly increasing".into()));
        }
        let mut series = BTreeMap::new();
        for (key, values) in samples {
            if values.len() != z.len() {
                return Err(ConfigError::Tabulated(format!(
                    "coefficient ({}, {}) has {} samples for {} grid points",
                    key.0,
                    key.1,
                    values.len(),
                    z.len()
                )));
            }
            if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(ConfigError::Tabulated(format!(
                    "coefficient ({}, {}) has non-finite samples",
                    key.0, key.1
                )));
            }
            let second = natural_spline_second_derivatives(&z, &values);
            series.insert(key, Spline { values, second });
        }
        Ok(Self { z, series })
    }

    /// Height-independent coefficients on a two-point grid.
    pub fn constant(bottom: f64, top: f64, values: BTreeMap<(i32, i32), Complex64>) -> Result<Self, ConfigError> {
        let samples = values.into_iter().map(|(k, v)| (k, vec![v, v])).collect();
        Self::new(vec![bottom, top], samples)
    }

    pub fn grid(&self) -> &[f64] {
        &self.z
    }

    pub fn has(&self, key: (i32, i32)) -> bool {
        self.series.contains_key(&key)
    }

    fn evaluate(&self, key: (i32, i32), z: f64) -> Option<Complex64> {
        let spline = self.series.get(&key)?;
        let grid = &self.z;
        let last = grid.len() - 1;
        let i = match grid.partition_point(|&g| g <= z) {
            0 => 0,
            p if p > last => last - 1,
            p => p - 1,
        };
        let (z0, z1) = (grid[i], grid[i + 1]);
        let h = z1 - z0;
        let a = (z1 - z) / h;
        let b = (z - z0) / h;
        let y = &spline.values;
        let m = &spline.second;
        Some(
            y[i] * a
                + y[i + 1] * b
                + (m[i] * (a * a * a - a) + m[i + 1] * (b * b * b - b)) * (h * h / 6.0),
        )
    }
}

fn natural_spline_second_derivatives(z: &[f64], y: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    let mut m = vec![ZERO; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm for the interior equations, m_0 = m_{n-1} = 0
    let mut diag = vec![0.0; n];
    let mut rhs = vec![ZERO; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = z[i] - z[i - 1];
        let h1 = z[i + 1] - z[i];
        let lower = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        if i > 1 {
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] = rhs[i] - rhs[i - 1] * w;
        }
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { m[i + 1] } else { ZERO };
        m[i] = (rhs[i] - next * upper[i]) / diag[i];
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialModel {
    Zero,
    GaussianLayers(Vec<GaussianLayer>),
    Tabulated(TabulatedPotential),
}

/// Potential model on the slab `[z_e, 0]`, optionally continued periodically
/// below `z_e` with the bottom `bulk_period` of the slab as the repeat unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    model: PotentialModel,
    bottom: f64,
    bulk_period: Option<f64>,
}

impl PotentialField {
    pub fn new(model: PotentialModel, bottom: f64, bulk_period: Option<f64>) -> Result<Self, ConfigError> {
        if !(bottom < 0.0) || !bottom.is_finite() {
            return Err(ConfigError::DomainBottom(bottom));
        }
        if let Some(p) = bulk_period {
            if !(p > 0.0) || p > -bottom * (1.0 + 1e-12) {
                return Err(ConfigError::BulkPeriod(p));
            }
        }
        match &model {
            PotentialModel::GaussianLayers(layers) => {
                for (i, layer) in layers.iter().enumerate() {
                    layer.validate(i)?;
                }
            }
            PotentialModel::Tabulated(table) => {
                let grid = table.grid();
                if grid[0] > bottom + DOMAIN_SLACK || grid[grid.len() - 1] < -DOMAIN_SLACK {
                    return Err(ConfigError::Tabulated(format!(
                        "grid [{}, {}] does not cover [{}, 0]",
                        grid[0],
                        grid[grid.len() - 1],
                        bottom
                    )));
                }
            }
            PotentialModel::Zero => {}
        }
        Ok(Self { model, bottom, bulk_period })
    }

    pub fn zero(bottom: f64) -> Result<Self, ConfigError> {
        Self::new(PotentialModel::Zero, bottom, None)
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn bottom(&self) -> f64 {
        self.bottom
    }

    pub fn bulk_period(&self) -> Option<f64> {
        self.bulk_period
    }

    /// Every coefficient carries an absorbing imaginary part.
    pub fn is_absorbing(&self) -> bool {
        match &self.model {
            PotentialModel::Zero => false,
            PotentialModel::GaussianLayers(layers) => {
                !layers.is_empty() && layers.iter().all(|l| l.absorption > 0.0 && l.amplitude != 0.0)
            }
            PotentialModel::Tabulated(t) => t
                .series
                .values()
                .all(|s| s.values.iter().all(|v| v.im < 0.0)),
        }
    }

    /// Map `z` into the slab, folding heights below `z_e` into the bulk unit.
    pub fn fold(&self, z: f64) -> Result<f64, SolverError> {
        let out = SolverError::Domain { z, bottom: self.bottom };
        if !z.is_finite() || z > DOMAIN_SLACK {
            return Err(out);
        }
        if z >= self.bottom - DOMAIN_SLACK {
            return Ok(z.clamp(self.bottom, 0.0));
        }
        match self.bulk_period {
            Some(p) => Ok(self.bottom + (z - self.bottom).rem_euclid(p)),
            None => Err(out),
        }
    }

    /// Bind the field to a rod set, precomputing height-independent parts.
    pub fn bind(&self, rods: &ReciprocalRodSet) -> Result<PotentialEvaluator, ConfigError> {
        PotentialEvaluator::new(self.clone(), rods)
    }
}

/// A field bound to a rod set; produces `U(z)`.
#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    field: PotentialField,
    n: usize,
    kind: Bound,
}

#[derive(Debug, Clone)]
enum Bound {
    Zero,
    /// U(z) = Σ_l depth_l(z) · C_l
    Layers(Vec<(GaussianLayer, CMatrix)>),
    /// distinct differences and, for each matrix entry, the index into them
    Tabulated(TabulatedPotential, Vec<(i32, i32)>, Vec<usize>),
}

impl PotentialEvaluator {
    fn new(field: PotentialField, rods: &ReciprocalRodSet) -> Result<Self, ConfigError> {
        let n = rods.len();
        let kind = match field.model() {
            PotentialModel::Zero => Bound::Zero,
            PotentialModel::GaussianLayers(layers) => {
                let lattice = rods.lattice();
                let bound = layers
                    .iter()
                    .map(|layer| {
                        let strength = layer.strength();
                        let c = CMatrix::from_fn(n, n, |j, k| {
                            let (d1, d2) = rods.difference(j, k);
                            strength * layer.lateral(lattice.rod_vector(d1, d2))
                        });
                        (*layer, c)
                    })
                    .collect();
                Bound::Layers(bound)
            }
            PotentialModel::Tabulated(table) => {
                let mut keys: Vec<(i32, i32)> = Vec::new();
                let mut slot = Vec::with_capacity(n * n);
                // column-major order to match the matrix layout
                for k in 0..n {
                    for j in 0..n {
                        let key = rods.difference(j, k);
                        if !table.has(key) {
                            return Err(ConfigError::MissingCoefficient(key.0, key.1));
                        }
                        let idx = match keys.iter().position(|&x| x == key) {
                            Some(i) => i,
                            None => {
                                keys.push(key);
                                keys.len() - 1
                            }
                        };
                        slot.push(idx);
                    }
                }
                Bound::Tabulated(table.clone(), keys, slot)
            }
        };
        Ok(Self { field, n, kind })
    }

    pub fn field(&self) -> &PotentialField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Bound::Zero)
    }

    /// Write `U(z)` into `out` (resized if needed).
    pub fn evaluate_into(&self, z: f64, out: &mut CMatrix) -> Result<(), SolverError> {
        let z = self.field.fold(z)?;
        if out.nrows() != self.n || out.ncols() != self.n {
            *out = CMatrix::zeros(self.n, self.n);
        } else {
            out.fill(ZERO);
        }
        match &self.kind {
            Bound::Zero => {}
            Bound::Layers(layers) => {
                for (layer, c) in layers {
                    let w = layer.depth(z);
                    if w == 0.0 {
                        continue;
                    }
                    out.zip_apply(c, |o, v| *o += v * w);
                }
            }
            Bound::Tabulated(table, keys, slot) => {
                let values: Vec<Complex64> = keys
                    .iter()
                    .map(|&key| table.evaluate(key, z).expect("coefficient checked at bind time"))
                    .collect();
                for (o, &i) in out.iter_mut().zip(slot) {
                    *o = values[i];
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, z: f64) -> Result<CMatrix, SolverError> {
        let mut out = CMatrix::zeros(self.n, self.n);
        self.evaluate_into(z, &mut out)?;
        Ok(out)
    }
}

/// `U(z)` for a field on a rod set.
pub fn eval_potential(field: &PotentialField, rods: &ReciprocalRodSet, z: f64) -> Result<CMatrix, SolverError> {
    field.bind(rods)?.evaluate(z)
}
