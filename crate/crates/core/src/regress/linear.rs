use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Relative singular-value cutoff for the least-squares pseudo-inverse.
pub const SVD_CUTOFF: f64 = 1e-10;

/// Minimum-norm least-squares coefficients `argmin ‖Φβ − z‖²` via SVD.
pub fn linear_lsq(phi: ArrayView2<'_, f64>, z: &[f64]) -> Result<Vec<f64>> {
    let (m, f) = phi.dim();
    if z.len() != m {
        return Err(Error::Dimension(format!("{m} rows but {} targets", z.len())));
    }
    if phi.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in least-squares system".into()));
    }
    if f == 0 {
        return Ok(Vec::new());
    }
    let a = DMatrix::from_fn(m, f, |i, j| phi[(i, j)]);
    let b = DVector::from_column_slice(z);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = SVD_CUTOFF * smax;
    let sol = svd
        .solve(&b, eps)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    Ok(sol.iter().cloned().collect())
}

/// `Φβ` for a dense design.
pub fn predict_linear(phi: ArrayView2<'_, f64>, beta: &[f64]) -> Vec<f64> {
    phi.rows()
        .into_iter()
        .map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn intercept_only_gives_mean() {
        let phi = Array2::ones((5, 1));
        let beta = linear_lsq(phi.view(), &[1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        assert!((beta[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        let phi = Array2::from_shape_fn((4, 2), |(i, _)| 1.0 + i as f64);
        let z: Vec<f64> = (0..4).map(|i| 2.0 * (1.0 + i as f64)).collect();
        let beta = linear_lsq(phi.view(), &z).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-10 && (beta[1] - 1.0).abs() < 1e-10);
    }
}
