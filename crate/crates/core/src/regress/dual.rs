//! Sample-average dual minimisation `min_β (1/M) Σ_i max_n (Z_{i,n} − Σ_b β_b M_{i,b,n})`
//! for martingale bases that enter linearly.

use ndarray::{Array2, ArrayView2, ArrayView3};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::path_rng;

use super::mlp::Adam;

/// Subgradient-ADAM controls shared by every dual backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Final learning rate as a fraction of `lr` (linear decay).
    #[serde(default = "default_lr_floor")]
    pub lr_floor: f64,
    pub seed: u64,
    /// Initial log-sum-exp temperature, annealed linearly to a hard max.
    #[serde(default)]
    pub smooth_max: Option<f64>,
}

fn default_lr_floor() -> f64 {
    0.01
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 1024,
            lr: 1e-2,
            lr_floor: default_lr_floor(),
            seed: 0,
            smooth_max: None,
        }
    }
}

impl DualConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let frac = if self.epochs > 1 {
            epoch as f64 / (self.epochs - 1) as f64
        } else {
            0.0
        };
        self.lr * (1.0 - frac * (1.0 - self.lr_floor))
    }

    pub fn temperature_at(&self, epoch: usize) -> Option<f64> {
        self.smooth_max.and_then(|tau| {
            let t = tau * (1.0 - epoch as f64 / self.epochs.max(1) as f64);
            (t > 1e-9).then_some(t)
        })
    }
}

/// Trained coefficients and their in-sample hard-max objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFit {
    pub beta: Vec<f64>,
    pub objective: f64,
    /// Full-batch objective after each epoch.
    pub history: Vec<f64>,
}

/// Optional quadratic penalty `λ βᵀ R β`.
#[derive(Debug, Clone, Copy)]
pub struct Penalty<'a> {
    pub lambda: f64,
    pub matrix: ArrayView2<'a, f64>,
}

fn check(basis: &ArrayView3<'_, f64>, z: &ArrayView2<'_, f64>) -> Result<()> {
    let (m, _, n) = basis.dim();
    if z.dim() != (m, n) {
        return Err(Error::Dimension(format!(
            "basis {:?} vs cash flows {:?}",
            basis.dim(),
            z.dim()
        )));
    }
    Ok(())
}

/// Pathwise values `max_n (Z_{i,n} − Σ_b β_b M_{i,b,n})`.
pub fn dual_pathwise(basis: ArrayView3<'_, f64>, z: ArrayView2<'_, f64>, beta: &[f64]) -> Result<Vec<f64>> {
    check(&basis, &z)?;
    let (m, b, n) = basis.dim();
    if beta.len() != b {
        return Err(Error::Dimension(format!(
            "{b} basis martingales, {} coefficients",
            beta.len()
        )));
    }
    Ok((0..m)
        .map(|i| {
            (0..n)
                .map(|k| z[(i, k)] - (0..b).map(|j| beta[j] * basis[(i, j, k)]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

pub fn dual_objective(basis: ArrayView3<'_, f64>, z: ArrayView2<'_, f64>, beta: &[f64]) -> Result<f64> {
    let v = dual_pathwise(basis, z, beta)?;
    Ok(v.iter().sum::<f64>() / v.len().max(1) as f64)
}

fn penalty_value(p: &Option<Penalty<'_>>, beta: &[f64]) -> f64 {
    match p {
        None => 0.0,
        Some(p) => {
            let b = beta.len();
            let mut acc = 0.0;
            for i in 0..b {
                for j in 0..b {
                    acc += beta[i] * p.matrix[(i, j)] * beta[j];
                }
            }
            p.lambda * acc
        }
    }
}

/// Subgradient-ADAM minimisation; returns the best full-batch iterate
/// (including `β = 0`).
pub fn dual_minimize(
    basis: ArrayView3<'_, f64>,
    z: ArrayView2<'_, f64>,
    penalty: Option<Penalty<'_>>,
    cfg: &DualConfig,
) -> Result<DualFit> {
    check(&basis, &z)?;
    let (m, b, n) = basis.dim();
    if let Some(p) = &penalty {
        if p.matrix.dim() != (b, b) {
            return Err(Error::Dimension("penalty matrix does not match basis".into()));
        }
    }
    let score = |beta: &[f64]| -> Result<f64> { Ok(dual_objective(basis, z, beta)? + penalty_value(&penalty, beta)) };
    let mut beta = vec![0.0; b];
    let mut best = (score(&beta)?, beta.clone());
    let mut history = Vec::with_capacity(cfg.epochs);
    if b == 0 || m == 0 {
        return Ok(DualFit {
            objective: dual_objective(basis, z, &beta)?,
            beta,
            history,
        });
    }
    let mut adam = Adam::new(cfg.lr);
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = path_rng(cfg.seed, 0xd0a1);
    let mut grad = vec![0.0; b];
    let mut vals = vec![0.0; n];
    for epoch in 0..cfg.epochs {
        adam.lr = cfg.lr_at(epoch);
        let tau = cfg.temperature_at(epoch);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                for k in 0..n {
                    vals[k] = z[(i, k)] - (0..b).map(|j| beta[j] * basis[(i, j, k)]).sum::<f64>();
                }
                match tau {
                    None => {
                        let k = (0..n).fold(0, |a, k| if vals[k] > vals[a] { k } else { a });
                        for j in 0..b {
                            grad[j] -= w * basis[(i, j, k)];
                        }
                    }
                    Some(t) => {
                        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let ws: Vec<f64> = vals.iter().map(|v| ((v - top) / t).exp()).collect();
                        let tot: f64 = ws.iter().sum();
                        for k in 0..n {
                            let p = ws[k] / tot;
                            for j in 0..b {
                                grad[j] -= w * p * basis[(i, j, k)];
                            }
                        }
                    }
                }
            }
            if let Some(p) = &penalty {
                for (i, g) in grad.iter_mut().enumerate() {
                    *g += 2.0 * p.lambda * (0..b).map(|j| p.matrix[(i, j)] * beta[j]).sum::<f64>();
                }
            }
            adam.step(&mut [(beta.as_mut_slice(), grad.as_slice())]);
        }
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "dual coefficients diverged at epoch {epoch}; config {cfg:?}"
            )));
        }
        let s = score(&beta)?;
        history.push(s);
        if s < best.0 {
            best = (s, beta.clone());
        }
    }
    let beta = best.1;
    Ok(DualFit {
        objective: dual_objective(basis, z, &beta)?,
        beta,
        history,
    })
}

/// Martingale values `Σ_b β_b M_{i,b,n}` for every path and date.
pub fn combine_basis(basis: ArrayView3<'_, f64>, beta: &[f64]) -> Array2<f64> {
    let (m, b, n) = basis.dim();
    Array2::from_shape_fn((m, n), |(i, k)| (0..b).map(|j| beta[j] * basis[(i, j, k)]).sum())
}
