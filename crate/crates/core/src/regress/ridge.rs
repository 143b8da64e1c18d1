use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form kernel ridge coefficients on Nyström landmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeSolution {
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub landmarks: Vec<usize>,
    /// Relative diagonal jitter (to `trace / L`) that was needed, if any.
    pub jitter: Option<f64>,
}

impl RidgeSolution {
    /// `f(x) = Σ_l α_l k(x^{(j_l)}, x)` for rows of kernel evaluations.
    pub fn predict(&self, k: ArrayView2<'_, f64>) -> Vec<f64> {
        k.rows()
            .into_iter()
            .map(|r| r.iter().zip(&self.alpha).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Solve `(KᵀK + MλR) α = Kᵀz`.
pub fn kernel_ridge(
    k: ArrayView2<'_, f64>,
    r: ArrayView2<'_, f64>,
    z: &[f64],
    lambda: f64,
    landmarks: Vec<usize>,
) -> Result<RidgeSolution> {
    let (m, l) = k.dim();
    if r.dim() != (l, l) || z.len() != m {
        return Err(Error::Dimension(format!(
            "ridge shapes K {m}x{l}, R {:?}, z {}",
            r.dim(),
            z.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("ridge parameter {lambda} must be non-negative")));
    }
    if l == 0 {
        return Ok(RidgeSolution {
            alpha: Vec::new(),
            lambda,
            landmarks,
            jitter: None,
        });
    }
    let kn = to_na(&k.to_owned());
    let rn = to_na(&r.to_owned());
    let zn = DVector::from_column_slice(z);
    let mut lhs = kn.transpose() * &kn + rn * (m as f64 * lambda);
    lhs = (&lhs + lhs.transpose()) * 0.5;
    let rhs = kn.transpose() * zn;
    let scale = (lhs.trace() / l as f64).max(f64::MIN_POSITIVE);
    let mut jitter = None;
    loop {
        let mut a = lhs.clone();
        if let Some(j) = jitter {
            for d in 0..l {
                a[(d, d)] += j * scale;
            }
        }
        if let Some(ch) = a.cholesky() {
            let alpha = ch.solve(&rhs);
            if alpha.iter().all(|v| v.is_finite()) {
                return Ok(RidgeSolution {
                    alpha: alpha.iter().cloned().collect(),
                    lambda,
                    landmarks,
                    jitter,
                });
            }
        }
        jitter = match jitter {
            None => Some(1e-12),
            Some(j) if j < 1e-8 * (1.0 - 1e-9) => Some(j * 10.0),
            Some(_) => {
                return Err(Error::Numerical(format!(
                    "kernel ridge system singular after jitter 1e-8 at lambda = {lambda}; use lambda > 0"
                )))
            }
        };
    }
}

/// Conjugate-gradient solve of a symmetric positive definite system.
pub fn conjugate_gradient(a: &Array2<f64>, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let b_norm = rs.sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            break;
        }
        let ap: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * p[j]).sum()).collect();
        let alpha = rs / p.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        for i in 0..n {
            p[i] = r[i] + rs_new / rs * p[i];
        }
        rs = rs_new;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_landmarks_give_empty_solution() {
        let k = Array2::<f64>::zeros((3, 0));
        let r = Array2::<f64>::zeros((0, 0));
        assert!(kernel_ridge(k.view(), r.view(), &[1.0, 2.0, 3.0], 0.1, vec![])
            .unwrap()
            .alpha
            .is_empty());
    }

    #[test]
    fn negative_lambda_is_config_error() {
        let k = Array2::<f64>::eye(2);
        assert!(kernel_ridge(k.view(), k.view(), &[1.0, 2.0], -1.0, vec![0, 1])
            .unwrap_err()
            .is_config());
    }
}
