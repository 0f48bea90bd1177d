//! Dense linear algebra for the small symmetric matrices this toolkit deals in
//! (p ≤ 64): Cholesky, LU with partial pivoting, cyclic Jacobi eigensolver.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Maximum number of cyclic Jacobi sweeps before reporting non-convergence.
pub const JACOBI_MAX_SWEEPS: usize = 30;

pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Returns `(A + Aᵀ) / 2`.
pub fn symmetrized(a: ArrayView2<'_, f64>) -> Array2<f64> {
    let p = a.nrows();
    Array2::from_shape_fn((p, p), |(i, j)| 0.5 * (a[[i, j]] + a[[j, i]]))
}

pub fn require_square(a: ArrayView2<'_, f64>, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Lower-triangular `L` with positive diagonal and `L Lᵀ = A`.
///
/// Only the lower triangle of `a` is read. The error carries the 1-based
/// index of the first non-positive pivot.
pub fn cholesky(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let p = require_square(a, "cholesky input")?;
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j + 1 });
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// `log |A|` for positive definite `A`, as `2 Σ log L_ii`.
pub fn log_det_pd(a: ArrayView2<'_, f64>) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>())
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn solve_lower(l: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Array1<f64> {
    let p = l.nrows();
    let mut y = Array1::<f64>::zeros(p);
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// LU factorization with partial pivoting, `P A = L U`, packed row-major.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = require_square(a, "LU input")?;
        // logical (row-major) order regardless of memory layout
        let mut lu: Vec<f64> = a.iter().copied().collect();
        let scale = lu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Err(Error::Singular("zero matrix".into()));
        }
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tiny {
                return Err(Error::Singular(format!("pivot {} below {tiny:e}", k + 1)));
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let f = row[k] / pivot;
                row[k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        row[j] -= f * row_k[j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut x = Array2::<f64>::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            let sol = self.solve_vec(&col.to_vec());
            x.column_mut(j).assign(&Array1::from(sol));
        }
        x
    }

    pub fn inverse(&self) -> Array2<f64> {
        self.solve_mat(Array2::eye(self.n).view())
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub eigenvectors: Array2<f64>,
}

impl EigenDecomposition {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let q = &self.eigenvectors;
        let ql = q * &self.eigenvalues.view().insert_axis(ndarray::Axis(0));
        ql.dot(&q.t())
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// The input is symmetrized first; inputs asymmetric beyond 1e-8 relative are
/// rejected. Ties keep the order in which the rotations left them (stable
/// sort), and each eigenvector is signed so its largest-magnitude entry is
/// positive, so output is a deterministic function of the input.
pub fn sym_eigen(a: ArrayView2<'_, f64>) -> Result<EigenDecomposition> {
    let p = require_square(a, "eigen input")?;
    let norm = frobenius(a);
    if !norm.is_finite() {
        return Err(Error::NonFiniteResult("eigen input has non-finite entries".into()));
    }
    let asym = frobenius((&a - &a.t()).view());
    if asym > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (asymmetry {asym:e}, norm {norm:e})"
        )));
    }
    let s = symmetrized(a);
    let mut m: Vec<f64> = s.iter().copied().collect();
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }

    let off = |m: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    acc += m[i * p + j] * m[i * p + j];
                }
            }
        }
        acc.sqrt()
    };
    let tol = 1e-15 * norm;

    let mut sweeps = 0;
    while off(&m) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: off(&m) });
        }
        sweeps += 1;
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = m[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let theta = (m[j * p + j] - m[i * p + i]) / (2.0 * aij);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..p {
                    let (ki, kj) = (m[k * p + i], m[k * p + j]);
                    m[k * p + i] = c * ki - sn * kj;
                    m[k * p + j] = sn * ki + c * kj;
                }
                for k in 0..p {
                    let (ik, jk) = (m[i * p + k], m[j * p + k]);
                    m[i * p + k] = c * ik - sn * jk;
                    m[j * p + k] = sn * ik + c * jk;
                }
                m[i * p + j] = 0.0;
                m[j * p + i] = 0.0;
                for k in 0..p {
                    let (ki, kj) = (v[k * p + i], v[k * p + j]);
                    v[k * p + i] = c * ki - sn * kj;
                    v[k * p + j] = sn * ki + c * kj;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| m[y * p + y].total_cmp(&m[x * p + x]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&k| m[k * p + k]));
    let mut eigenvectors = Array2::<f64>::zeros((p, p));
    for (col, &k) in order.iter().enumerate() {
        let (mut best, mut sign) = (0.0f64, 1.0);
        for r in 0..p {
            let x = v[r * p + k];
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        for r in 0..p {
            eigenvectors[[r, col]] = sign * v[r * p + k];
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Spectral radius of a general square matrix.
///
/// Uses Gelfand's formula on repeated squarings, `ρ(A) = lim ‖A^{2^m}‖^{1/2^m}`,
/// renormalizing at each step so nothing overflows. Works for non-symmetric
/// and defective matrices, where plain power iteration can stall.
pub fn spectral_radius(a: ArrayView2<'_, f64>) -> Result<f64> {
    require_square(a, "spectral radius input")?;
    let norm = frobenius(a);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut b = &a / norm;
    let mut log_norm = 0.0; // log ‖(A/‖A‖)^{2^m}‖
    let mut power = 1.0f64;
    for _ in 0..48 {
        let sq = b.dot(&b);
        let f = frobenius(sq.view());
        if f == 0.0 {
            return Ok(0.0);
        }
        log_norm = 2.0 * log_norm + f.ln();
        power *= 2.0;
        b = sq / f;
    }
    Ok(norm * (log_norm / power).exp())
}
