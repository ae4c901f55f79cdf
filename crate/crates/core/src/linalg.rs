//! Small dense linear-algebra kernels used by the solvers.
//!
//! Everything here targets desk-scale problems (`m, n` in the low thousands,
//! dense, `f64`), so plain textbook algorithms are appropriate.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Euclidean norm.
pub fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Cholesky factor of a symmetric positive definite matrix.
///
/// Stores the lower-triangular factor `L` with `A = L Lᵀ`. Construction fails
/// if a pivot is not strictly positive, which doubles as the "is this matrix
/// positive definite" test used by parameter validation.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "cholesky needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite (pivot {d:e} at column {j})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    /// Solves `A x = rhs` using the stored factor.
    pub fn solve(&self, rhs: &Array1<f64>) -> Array1<f64> {
        let n = self.l.nrows();
        debug_assert_eq!(rhs.len(), n);
        // forward: L y = rhs
        let mut y = rhs.clone();
        for i in 0..n {
            for k in 0..i {
                let t = self.l[(i, k)] * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = self.l[(k, i)] * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting. Used only on tiny systems (vertex enumeration, saddle
/// references), where stability at this scale is not a concern.
pub fn solve_square(a: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || rhs.len() != n {
        return Err(Error::Dimension("solve_square shape mismatch".into()));
    }
    let mut m = a.clone();
    let mut x = rhs.clone();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[(row, col)].abs() > m[(piv, col)].abs() {
                piv = row;
            }
        }
        if m[(piv, col)].abs() < 1e-13 {
            return Err(Error::Numerical("singular matrix in solve_square".into()));
        }
        if piv != col {
            for k in 0..n {
                m.swap((col, k), (piv, k));
            }
            x.swap(col, piv);
        }
        for row in col + 1..n {
            let f = m[(row, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                let t = f * m[(col, k)];
                m[(row, k)] -= t;
            }
            let t = f * x[col];
            x[row] -= t;
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = m[(i, k)] * x[k];
            x[i] -= t;
        }
        x[i] /= m[(i, i)];
    }
    Ok(x)
}

/// Number of power-iteration steps used for spectral-radius estimates.
pub const POWER_ITER_STEPS: usize = 100;

/// Relative-change stopping threshold for the power iteration.
pub const POWER_ITER_RTOL: f64 = 1e-10;

/// Estimates `ρ(AᵀA)` (the squared spectral norm of `A`) by power iteration
/// on `v ↦ Aᵀ(A v)`: 100 steps, stopping early once the Rayleigh quotient
/// changes by less than `1e-10` relative. `ρ(AᵀA) = ρ(AAᵀ)`, so the same
/// routine serves both orderings.
///
/// The start vector is a fixed pseudorandom direction rather than all-ones:
/// structured matrices (e.g. game matrices with zero row sums) can have the
/// ones vector exactly in the null space.
pub fn spectral_norm_sq(a: &Array2<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = crate::gen::SplitMix64::new(0x9E37_79B9_7F4A_7C15);
    let mut v = Array1::from_shape_fn(n, |_| rng.next_normal());
    let nv = norm2(&v);
    if nv == 0.0 {
        return 0.0;
    }
    v.mapv_inplace(|t| t / nv);
    let mut rho = 0.0f64;
    for _ in 0..POWER_ITER_STEPS {
        let w = a.t().dot(&a.dot(&v));
        let rho_next = v.dot(&w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        if (rho_next - rho).abs() <= POWER_ITER_RTOL * rho_next.abs() {
            return rho_next;
        }
        rho = rho_next;
    }
    rho
}
