//! One-sided (Hestenes) Jacobi singular value decomposition.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `matrix = uᵀ · diag(singular_values) · v`, with the rows of `u` the left
/// singular vectors and the rows of `v` the right singular vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    /// k×k orthogonal.
    pub u: DMatrix<f64>,
    /// Descending, nonnegative, length `min(k, d)`.
    pub singular_values: Vec<f64>,
    /// d×d orthogonal.
    pub v: DMatrix<f64>,
}

impl Svd {
    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > rel_tol * smax).count()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (k, d) = (self.u.nrows(), self.v.nrows());
        let mut sigma = DMatrix::zeros(k, d);
        for (i, &s) in self.singular_values.iter().enumerate() {
            sigma[(i, i)] = s;
        }
        self.u.transpose() * sigma * &self.v
    }
}

pub fn svd(matrix: &DMatrix<f64>) -> Result<Svd> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("svd of a matrix with non-finite entries".into()));
    }
    let (k, d) = matrix.shape();
    if k >= d {
        let (left, sv, right) = tall_svd(matrix)?;
        Ok(Svd { u: left.transpose(), singular_values: sv, v: right.transpose() })
    } else {
        let (left, sv, right) = tall_svd(&matrix.transpose())?;
        Ok(Svd { u: right.transpose(), singular_values: sv, v: left.transpose() })
    }
}

/// For `a` (m×n, m >= n) returns `(U m×m, sigma, W n×n)` with columns of U and
/// W the singular vectors: `a = U Σ Wᵀ`.
fn tall_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (m, n) = a.shape();
    let mut b = a.clone();
    let mut w = DMatrix::<f64>::identity(n, n);
    let eps = 1e-15;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = b.column(p).norm_squared();
                let beta: f64 = b.column(q).norm_squared();
                let gamma: f64 = b.column(p).dot(&b.column(q));
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let (bp, bq) = (b[(r, p)], b[(r, q)]);
                    b[(r, p)] = c * bp - s * bq;
                    b[(r, q)] = s * bp + c * bq;
                }
                for r in 0..n {
                    let (wp, wq) = (w[(r, p)], w[(r, q)]);
                    w[(r, p)] = c * wp - s * wq;
                    w[(r, q)] = s * wp + c * wq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);

    let mut right = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &w.column(src));
    }

    let mut left_cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(m);
    for (dst, &src) in order.iter().enumerate() {
        if sigma[dst] > 1e-300 && sigma[dst] > 1e-14 * smax {
            left_cols.push(b.column(src) / sigma[dst]);
        } else {
            break;
        }
    }
    complete_basis(&mut left_cols, m);
    let left = DMatrix::from_columns(&left_cols);
    Ok((left, sigma, right))
}

/// Extends an orthonormal set of columns to a basis of R^m by Gram–Schmidt
/// over the canonical vectors.
pub(crate) fn complete_basis(cols: &mut Vec<nalgebra::DVector<f64>>, m: usize) {
    let mut e = 0;
    while cols.len() < m && e < m {
        let mut v = nalgebra::DVector::<f64>::zeros(m);
        v[e] = 1.0;
        for _ in 0..2 {
            for c in cols.iter() {
                let proj = c.dot(&v);
                v -= c * proj;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            cols.push(v / nrm);
        }
        e += 1;
    }
}
