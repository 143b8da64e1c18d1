//! Finite-difference solution of the signature-kernel Goursat problem
//! `∂²u/∂s∂t = ⟨ẋ(s), ẏ(t)⟩ u`, `u(0,·) = u(·,0) = 1`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::AugmentedPath;

/// Solver controls. Each data cell is split into `refine × refine` sub-cells
/// sharing the cell's increment inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoursatConfig {
    pub refine: usize,
}

impl Default for GoursatConfig {
    fn default() -> Self {
        Self { refine: 1 }
    }
}

impl GoursatConfig {
    pub fn name(&self) -> String {
        format!("explicit2_refine{}", self.refine)
    }
}

/// Solution surface on the data grids: `u[p][q] ≈ k_{u_p, v_q}(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub surface: Array2<f64>,
}

impl KernelGrid {
    pub fn terminal(&self) -> f64 {
        let (p, q) = self.surface.dim();
        self.surface[(p - 1, q - 1)]
    }

    /// `k_{u_p, u_p}` for `p = 0..=min(P, Q)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let (p, q) = self.surface.dim();
        (0..p.min(q)).map(|k| self.surface[(k, k)]).collect()
    }
}

/// Row-by-row sweep over increments `dx` (`P × d`) and `dy` (`Q × d`).
/// `on_row(p, row)` receives data-node values `u[p][0..=Q]` for every `p`.
fn sweep(dx: &[f64], dy: &[f64], dim: usize, cfg: GoursatConfig, mut on_row: impl FnMut(usize, &[f64])) -> Result<()> {
    let r = cfg.refine.max(1);
    let pn = dx.len() / dim;
    let qn = dy.len() / dim;
    let width = qn * r + 1;
    let mut prev = vec![1.0; width];
    let mut cur = vec![1.0; width];
    let mut nodes = vec![1.0; qn + 1];
    let mut a = vec![0.0; qn * r];
    let mut b = vec![0.0; qn * r];
    let scale = 1.0 / (r * r) as f64;
    on_row(0, &nodes);
    for p in 0..pn {
        let xp = &dx[p * dim..(p + 1) * dim];
        for q in 0..qn {
            let yq = &dy[q * dim..(q + 1) * dim];
            let inc = scale * xp.iter().zip(yq).map(|(u, v)| u * v).sum::<f64>();
            let ca = 1.0 + 0.5 * inc + inc * inc / 12.0;
            let cb = 1.0 - inc * inc / 12.0;
            a[q * r..(q + 1) * r].fill(ca);
            b[q * r..(q + 1) * r].fill(cb);
        }
        for _ in 0..r {
            cur[0] = 1.0;
            for j in 0..qn * r {
                cur[j + 1] = (cur[j] + prev[j + 1]) * a[j] - prev[j] * b[j];
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        for (q, n) in nodes.iter_mut().enumerate() {
            *n = prev[q * r];
        }
        if !nodes.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(
                "signature kernel overflowed; rescale the path channels before solving".into(),
            ));
        }
        on_row(p + 1, &nodes);
    }
    Ok(())
}

fn check_dims(x: &AugmentedPath, y: &AugmentedPath) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!(
            "path dimensions {} and {} differ",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// Full kernel surface of two augmented paths.
pub fn goursat_kernel(x: &AugmentedPath, y: &AugmentedPath, cfg: GoursatConfig) -> Result<KernelGrid> {
    check_dims(x, y)?;
    let (dx, dy) = (x.increments(), y.increments());
    let mut surface = Array2::zeros((x.len(), y.len()));
    sweep(&dx, &dy, x.dim(), cfg, |p, row| {
        surface.row_mut(p).iter_mut().zip(row).for_each(|(s, v)| *s = *v);
    })?;
    Ok(KernelGrid { surface })
}

/// Diagonal `k_{u_p,u_p}` for `p = 0..=P` from raw increments of equal length.
///
/// Only one grid row is kept in memory.
pub fn goursat_diagonal(dx: &[f64], dy: &[f64], dim: usize, cfg: GoursatConfig) -> Result<Vec<f64>> {
    if dx.len() != dy.len() || dim == 0 || dx.len() % dim != 0 {
        return Err(Error::Dimension(
            "diagonal solve needs increments of equal shape".into(),
        ));
    }
    let mut diag = vec![0.0; dx.len() / dim + 1];
    sweep(dx, dy, dim, cfg, |p, row| diag[p] = row[p])?;
    Ok(diag)
}
