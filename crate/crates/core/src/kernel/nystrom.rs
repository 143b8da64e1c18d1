//! Nyström landmark selection from signature-kernel diagonals.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::path_rng;

use super::goursat::{goursat_diagonal, GoursatConfig};
use super::lift::LiftedPaths;

/// `L` distinct indices drawn without replacement with probability
/// proportional to `weights`, returned in increasing order.
pub fn sample_landmarks(weights: &[f64], count: usize, seed: u64, stream: u64) -> Result<Vec<usize>> {
    let m = weights.len();
    if count > m {
        return Err(Error::Config(format!("cannot pick {count} landmarks from {m} samples")));
    }
    if count == m {
        return Ok((0..m).collect());
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Data("landmark weights must be finite and non-negative".into()));
    }
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    if positive < count {
        return Err(Error::Numerical(format!(
            "only {positive} samples have positive weight, need {count}"
        )));
    }
    let mut rng = path_rng(seed, stream);
    let picked = rand::seq::index::sample_weighted(&mut rng, m, |i| weights[i], count)
        .map_err(|e| Error::Numerical(format!("weighted sampling failed: {e}")))?;
    let mut out = picked.into_vec();
    out.sort_unstable();
    Ok(out)
}

/// Kernel-grid self-kernel diagonals `k_{u,u}(x_i, x_i)`, one row per path.
pub fn self_diagonals(paths: &LiftedPaths, cfg: GoursatConfig) -> Result<Array2<f64>> {
    let steps = paths.steps;
    let rows: Vec<Vec<f64>> = (0..paths.len())
        .into_par_iter()
        .map(|i| {
            let dx = paths.increments(i, steps);
            goursat_diagonal(dx, dx, paths.dim, cfg)
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((paths.len(), steps + 1), flat).expect("shape checked"))
}

/// Primal weights at kernel index `k`: `k_{t,t}(x_i, x_i)`.
pub fn primal_weights(diagonals: &Array2<f64>, k: usize) -> Vec<f64> {
    diagonals.column(k).to_vec()
}

/// Dual weights `∫_0^T k_{s,s}(x_i, x_i)² ds` by a left Riemann sum.
pub fn dual_weights(diagonals: &Array2<f64>, dt: f64) -> Vec<f64> {
    let steps = diagonals.ncols() - 1;
    diagonals
        .rows()
        .into_iter()
        .map(|r| r.iter().take(steps).map(|k| k * k * dt).sum())
        .collect()
}

/// Primal landmarks, resampled at every exercise date `1..N-1`
/// (`dates` are kernel-grid indices). Dates without a regression get none.
pub fn primal_landmarks(
    diagonals: &Array2<f64>,
    dates: &[usize],
    count: usize,
    seed: u64,
    per_date: bool,
) -> Result<Vec<Vec<usize>>> {
    let n = dates.len() - 1;
    let mut out = vec![Vec::new(); n + 1];
    if per_date {
        for d in 1..n {
            out[d] = sample_landmarks(&primal_weights(diagonals, dates[d]), count, seed, d as u64)?;
        }
    } else if n > 1 {
        let shared = sample_landmarks(&primal_weights(diagonals, dates[n]), count, seed, 0)?;
        for slot in out.iter_mut().take(n).skip(1) {
            *slot = shared.clone();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_and_invalid_counts() {
        assert_eq!(sample_landmarks(&[1.0; 5], 5, 1, 0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(sample_landmarks(&[1.0; 5], 6, 1, 0).unwrap_err().is_config());
    }

    #[test]
    fn draws_are_distinct_sorted_and_seeded() {
        let w: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let a = sample_landmarks(&w, 10, 7, 3).unwrap();
        assert_eq!(a, sample_landmarks(&w, 10, 7, 3).unwrap());
        assert!(a.windows(2).all(|p| p[0] < p[1]));
        assert_ne!(a, sample_landmarks(&w, 10, 8, 3).unwrap());
    }

    #[test]
    fn dual_weight_normalisation() {
        let diag = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 3f64.sqrt(), 0.0]).unwrap();
        let w = dual_weights(&diag, 1.0);
        let tot: f64 = w.iter().sum();
        assert!((w[0] / tot - 0.25).abs() < 1e-15);
        assert!((w[1] / tot - 0.75).abs() < 1e-15);
    }
}
