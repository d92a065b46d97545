use std::collections::HashSet;
use std::f64::consts::PI;

use crate::error::ConfigError;

pub type Vec2 = [f64; 2];

/// Two in-plane real-space lattice vectors (Å).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    a1: Vec2,
    a2: Vec2,
    b1: Vec2,
    b2: Vec2,
}

impl Lattice {
    pub fn new(a1: Vec2, a2: Vec2) -> Result<Self, ConfigError> {
        let det = a1[0] * a2[1] - a1[1] * a2[0];
        let scale = norm(a1) * norm(a2);
        if !det.is_finite() || !(det.abs() > 1e-12 * scale) {
            return Err(ConfigError::DegenerateLattice(det));
        }
        let f = 2.0 * PI / det;
        let b1 = [f * a2[1], -f * a2[0]];
        let b2 = [-f * a1[1], f * a1[0]];
        Ok(Self { a1, a2, b1, b2 })
    }

    pub fn real_vectors(&self) -> (Vec2, Vec2) {
        (self.a1, self.a2)
    }

    /// Reciprocal basis with `b_i · a_j = 2π δ_ij` (Å⁻¹).
    pub fn reciprocal_vectors(&self) -> (Vec2, Vec2) {
        (self.b1, self.b2)
    }

    pub fn rod_vector(&self, m1: i32, m2: i32) -> Vec2 {
        let (m1, m2) = (m1 as f64, m2 as f64);
        [
            m1 * self.b1[0] + m2 * self.b2[0],
            m1 * self.b1[1] + m2 * self.b2[1],
        ]
    }
}

pub(crate) fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// One reciprocal rod: integer indices on the reciprocal basis and the vector itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rod {
    pub index: (i32, i32),
    pub k: Vec2,
}

/// Ordered set of reciprocal rods; rod 0 is always the zero rod.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalRodSet {
    lattice: Lattice,
    rods: Vec<Rod>,
}

impl ReciprocalRodSet {
    /// Rods given explicitly by their integer indices. The first must be `(0, 0)`.
    pub fn from_indices(lattice: Lattice, indices: &[(i32, i32)]) -> Result<Self, ConfigError> {
        if indices.first() != Some(&(0, 0)) {
            return Err(ConfigError::MissingZeroRod);
        }
        let mut seen = HashSet::new();
        for &(m1, m2) in indices {
            if !seen.insert((m1, m2)) {
                return Err(ConfigError::DuplicateRod(m1, m2));
            }
        }
        let rods = indices
            .iter()
            .map(|&(m1, m2)| Rod {
                index: (m1, m2),
                k: lattice.rod_vector(m1, m2),
            })
            .collect();
        Ok(Self { lattice, rods })
    }

    /// Every rod with `|k| <= cutoff`, sorted by magnitude and then by `(m1, m2)`.
    pub fn within_cutoff(lattice: Lattice, cutoff: f64) -> Result<Self, ConfigError> {
        if !(cutoff >= 0.0) || !cutoff.is_finite() {
            return Err(ConfigError::RodCutoff(cutoff));
        }
        let (a1, a2) = lattice.real_vectors();
        // |m_i| = |k · a_i| / 2π <= cutoff |a_i| / 2π
        let r1 = (cutoff * norm(a1) / (2.0 * PI)).floor() as i32 + 1;
        let r2 = (cutoff * norm(a2) / (2.0 * PI)).floor() as i32 + 1;
        let limit = cutoff * (1.0 + 1e-12);
        let mut found = Vec::new();
        for m1 in -r1..=r1 {
            for m2 in -r2..=r2 {
                let k = lattice.rod_vector(m1, m2);
                let magnitude = norm(k);
                if magnitude <= limit {
                    // shells are compared on a 1e-9 Å⁻¹ grid so symmetric rods tie exactly
                    let shell = (magnitude * 1e9).round() as i64;
                    found.push((shell, m1, m2));
                }
            }
        }
        found.sort_unstable();
        let indices: Vec<(i32, i32)> = found.into_iter().map(|(_, m1, m2)| (m1, m2)).collect();
        Self::from_indices(lattice, &indices)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn rods(&self) -> &[Rod] {
        &self.rods
    }

    pub fn len(&self) -> usize {
        self.rods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rods.is_empty()
    }

    pub fn indices(&self) -> Vec<(i32, i32)> {
        self.rods.iter().map(|r| r.index).collect()
    }

    /// Integer index of `k_j - k_k`.
    pub fn difference(&self, j: usize, k: usize) -> (i32, i32) {
        let (a, b) = (self.rods[j].index, self.rods[k].index);
        (a.0 - b.0, a.1 - b.1)
    }

    /// Same rods in a different order; `order[new] = old`. Used to check
    /// that matrices built on the set transform by permutation.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, ConfigError> {
        let indices: Vec<_> = order.iter().map(|&i| self.rods[i].index).collect();
        Self::from_indices(self.lattice, &indices)
    }
}
