//! Small dense symmetric-positive-definite helpers.
//!
//! Problem dimensions in this crate are tiny (d <= 64), so a plain
//! row-major `Vec<f64>` with an explicit Cholesky factor beats pulling in a
//! full linear-algebra stack.

use crate::error::{Error, Result};

/// A symmetric positive definite matrix with its lower Cholesky factor.
///
/// Positive definiteness is established at construction; operations that
/// need `A^{-1}` go through triangular solves against the stored factor.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    dim: usize,
    data: Vec<f64>,
    chol: Vec<f64>,
    lambda_max: f64,
}

impl SpdMatrix {
    /// Builds from row-major entries, rejecting asymmetric or non-PD input.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let chol = cholesky(dim, &data)?;
        let mut m = Self {
            dim,
            data,
            chol,
            lambda_max: 0.0,
        };
        m.lambda_max = m.power_iteration();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self::new(dim, data).expect("identity is PD")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum())
            .collect()
    }

    /// Solves `A x = b` via the Cholesky factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        // forward: L y = b
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = b[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * y[j];
            }
            y[i] = s / self.chol[i * d + i];
        }
        // backward: L^T x = y
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = y[i];
            for j in i + 1..d {
                s -= self.chol[j * d + i] * x[j];
            }
            x[i] = s / self.chol[i * d + i];
        }
        x
    }

    /// `v^T A^{-1} v`, computed as `||L^{-1} v||^2`.
    pub fn inv_quad_form(&self, v: &[f64]) -> f64 {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = v[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * y[j];
            }
            y[i] = s / self.chol[i * d + i];
        }
        y.iter().map(|t| t * t).sum()
    }

    /// `v^T A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let av = self.mul_vec(v);
        dot(v, &av)
    }

    /// `L w` for the lower Cholesky factor; maps standard normals to
    /// `N(0, A)` samples.
    pub fn chol_mul_vec(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..=i).map(|j| self.chol[i * d + j] * w[j]).sum())
            .collect()
    }

    /// Largest eigenvalue (cached at construction); used for step sizing.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    fn power_iteration(&self) -> f64 {
        let d = self.dim;
        let mut v = vec![1.0 / (d as f64).sqrt(); d];
        let mut lam = 0.0;
        for _ in 0..200 {
            let w = self.mul_vec(&v);
            let nw = norm2(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
            let new_lam = dot(&next, &self.mul_vec(&next));
            let done = (new_lam - lam).abs() <= 1e-12 * (1.0 + new_lam.abs());
            lam = new_lam;
            v = next;
            if done {
                break;
            }
        }
        lam
    }
}

fn cholesky(d: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Solves the dense `k x k` system in place (Gaussian elimination with
/// partial pivoting); returns `None` for singular systems.
pub(crate) fn solve_dense(a: &mut [f64], b: &mut [f64], k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| a[p * k + col].abs().total_cmp(&a[q * k + col].abs()))?;
        if a[piv * k + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for j in 0..k {
                a.swap(col * k + j, piv * k + j);
            }
            b.swap(col, piv);
        }
        for row in col + 1..k {
            let f = a[row * k + col] / a[col * k + col];
            for j in col..k {
                a[row * k + j] -= f * a[col * k + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in i + 1..k {
            s -= a[i * k + j] * x[j];
        }
        x[i] = s / a[i * k + i];
    }
    Some(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
