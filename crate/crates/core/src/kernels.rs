//! Dense complex matrix primitives shared by both solvers.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major) throughout.
//! Provides the scaling-and-squaring matrix exponential, a row-pivoted LU
//! factorization used for right division `B·A⁻¹`, and the Gershgorin
//! condition estimate that drives the basis-change trigger.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::KernelError;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients of the [13/13] Padé approximant to `exp`.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled [13/13] approximant reaches
/// double-precision backward error.
const THETA13: f64 = 5.371_920_351_148_152;

pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `exp(m)` by scaling and squaring with the degree-13 diagonal Padé approximant.
pub fn matrix_exponential(m: &CMatrix) -> Result<CMatrix, KernelError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(KernelError::Dimension(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }

    let norm = one_norm(m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = if squarings > 0 {
        m.scale(0.5f64.powi(squarings))
    } else {
        m.clone()
    };

    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let ident = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    inner_u = &a6 * inner_u;
    inner_u += &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1);
    let u = &a * inner_u;

    let mut v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    v = &a6 * v;
    v += &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);

    let denominator = &v - &u;
    let numerator = &v + &u;
    let mut result = LuFactor::new(denominator)?.solve_left(&numerator);
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Row-pivoted LU factorization `P·A = L·U` stored in place.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: CMatrix,
    /// Row `k` of `P·A` is row `perm[k]` of `A`.
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(mut a: CMatrix) -> Result<Self, KernelError> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(KernelError::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot = k;
            let mut best = a[(k, k)].norm_sqr();
            for r in (k + 1)..n {
                let v = a[(r, k)].norm_sqr();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(KernelError::Singular(k));
            }
            if pivot != k {
                a.swap_rows(k, pivot);
                perm.swap(k, pivot);
            }
            let inv = ONE / a[(k, k)];
            for r in (k + 1)..n {
                a[(r, k)] *= inv;
            }
            for c in (k + 1)..n {
                let akc = a[(k, c)];
                if akc == ZERO {
                    continue;
                }
                for r in (k + 1)..n {
                    let l = a[(r, k)];
                    a[(r, c)] -= l * akc;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// `A⁻¹·B`.
    pub fn solve_left(&self, b: &CMatrix) -> CMatrix {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "solve_left: row mismatch");
        let mut x = CMatrix::zeros(n, b.ncols());
        for (k, &src) in self.perm.iter().enumerate() {
            x.row_mut(k).copy_from(&b.row(src));
        }
        for col in 0..x.ncols() {
            // forward substitution with unit lower factor
            for k in 0..n {
                let xk = x[(k, col)];
                if xk == ZERO {
                    continue;
                }
                for r in (k + 1)..n {
                    x[(r, col)] -= self.lu[(r, k)] * xk;
                }
            }
            for k in (0..n).rev() {
                let xk = x[(k, col)] / self.lu[(k, k)];
                x[(k, col)] = xk;
                for r in 0..k {
                    x[(r, col)] -= self.lu[(r, k)] * xk;
                }
            }
        }
        x
    }

    /// `B·A⁻¹`, working column by column from the right.
    pub fn solve_right(&self, b: &CMatrix) -> CMatrix {
        let n = self.dim();
        assert_eq!(b.ncols(), n, "solve_right: column mismatch");
        let rows = b.nrows();
        // Y·U = B
        let mut y = b.clone();
        for j in 0..n {
            for k in 0..j {
                let ukj = self.lu[(k, j)];
                if ukj == ZERO {
                    continue;
                }
                for r in 0..rows {
                    let v = y[(r, k)];
                    y[(r, j)] -= v * ukj;
                }
            }
            let inv = ONE / self.lu[(j, j)];
            for v in y.column_mut(j).iter_mut() {
                *v *= inv;
            }
        }
        // W·L = Y
        for j in (0..n).rev() {
            for k in (j + 1)..n {
                let lkj = self.lu[(k, j)];
                if lkj == ZERO {
                    continue;
                }
                for r in 0..rows {
                    let v = y[(r, k)];
                    y[(r, j)] -= v * lkj;
                }
            }
        }
        // X = W·P
        let mut x = CMatrix::zeros(rows, n);
        for (k, &dst) in self.perm.iter().enumerate() {
            x.column_mut(dst).copy_from(&y.column(k));
        }
        x
    }
}

/// Right division `B·A⁻¹` through a row-pivoted factorization of `A`.
pub fn solve_right(b: &CMatrix, a: &CMatrix) -> Result<CMatrix, KernelError> {
    if b.ncols() != a.nrows() {
        return Err(KernelError::Dimension(format!(
            "solve_right: B is {}x{}, A is {}x{}",
            b.nrows(),
            b.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(LuFactor::new(a.clone())?.solve_right(b))
}

/// Eigenvalue-ratio bound from Gershgorin row discs.
///
/// Returns `max_i(|q_ii| + r_i) / min_i(|q_ii| - r_i)` with `r_i` the
/// off-diagonal absolute row sum, or `+∞` once any row loses strict
/// diagonal dominance. Never underestimates `max|λ| / min|λ|`.
pub fn gershgorin_cond(q: &CMatrix) -> f64 {
    let n = q.nrows();
    assert_eq!(n, q.ncols(), "gershgorin_cond needs a square matrix");
    if n == 0 {
        return 1.0;
    }
    let mut radii = vec![0.0f64; n];
    for c in 0..n {
        for (r, radius) in radii.iter_mut().enumerate() {
            if r != c {
                *radius += q[(r, c)].norm();
            }
        }
    }
    let mut upper = 0.0f64;
    let mut lower = f64::INFINITY;
    for (i, radius) in radii.iter().enumerate() {
        let d = q[(i, i)].norm();
        upper = upper.max(d + radius);
        lower = lower.min(d - radius);
    }
    if !(lower > 0.0) || !upper.is_finite() {
        return f64::INFINITY;
    }
    upper / lower
}
