//! Sparse symmetric positive-definite solves: banded Cholesky and
//! Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};

/// Symmetric matrix in coordinate rows: `rows[i]` holds `(j, m_ij)` for all `j`.
pub struct SparseSym {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, _)| i.abs_diff(*j)))
            .max()
            .unwrap_or(0)
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            *yi = row.iter().map(|(j, v)| v * x[*j]).sum();
        }
    }

    /// Banded Cholesky `M = L Lᵀ` followed by two triangular solves.
    pub fn solve_banded(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        let b = self.bandwidth();
        let w = b + 1;
        // band[i*w + (i−j)] = L_ij for j ∈ [i−b, i]
        let mut band = vec![0.0; m * w];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if j <= i {
                    band[i * w + (i - j)] += v;
                }
            }
        }
        for i in 0..m {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut s = band[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(b));
                for k in k0..j {
                    s -= band[i * w + (i - k)] * band[j * w + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::LinearSolve(format!(
                            "matrix not positive definite at pivot {i} ({s})"
                        )));
                    }
                    band[i * w] = s.sqrt();
                } else {
                    band[i * w + (i - j)] = s / band[j * w];
                }
            }
        }
        let mut y = rhs.to_vec();
        for i in 0..m {
            let j0 = i.saturating_sub(b);
            let mut s = y[i];
            for j in j0..i {
                s -= band[i * w + (i - j)] * y[j];
            }
            y[i] = s / band[i * w];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for j in i + 1..(i + w).min(m) {
                s -= band[j * w + (j - i)] * y[j];
            }
            y[i] = s / band[i * w];
        }
        Ok(y)
    }

    /// Preconditioned conjugate gradients to relative residual `tol`.
    pub fn solve_cg(&self, rhs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let m = self.dim();
        let diag: Vec<f64> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().filter(|(j, _)| *j == i).map(|(_, v)| *v).sum())
            .collect();
        if diag.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::LinearSolve("non-positive diagonal".into()));
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let norm_b = dot(rhs, rhs).sqrt();
        let mut x = vec![0.0; m];
        if norm_b == 0.0 {
            return Ok(x);
        }
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut q = vec![0.0; m];
        for _ in 0..max_iter {
            self.mul(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::LinearSolve("conjugate gradients broke down".into()));
            }
            let alpha = rz / pq;
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            if dot(&r, &r).sqrt() <= tol * norm_b {
                return Ok(x);
            }
            for i in 0..m {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::LinearSolve(format!("conjugate gradients: no convergence in {max_iter} iterations")))
    }
}
