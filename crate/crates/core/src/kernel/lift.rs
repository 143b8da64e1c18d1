//! Kernel-grid lifts of simulated paths, with per-channel scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Field, PathBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChannel {
    QuadraticVariation,
    Time,
    VolBrownian,
    OrthBrownian,
    LogPrice,
    Vol,
}

/// Which channels enter the kernel and on how many kernel steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelLiftSpec {
    pub channels: Vec<KernelChannel>,
    pub kernel_steps: usize,
}

impl KernelLiftSpec {
    /// `(⟨X⟩_t, W_t, X_t)` on `kernel_steps` steps.
    pub fn standard(kernel_steps: usize) -> Self {
        Self {
            channels: vec![
                KernelChannel::QuadraticVariation,
                KernelChannel::VolBrownian,
                KernelChannel::LogPrice,
            ],
            kernel_steps,
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Fine-grid stride between kernel nodes.
    pub fn stride(&self, batch: &PathBatch) -> Result<usize> {
        self.stride_for(batch.fine_steps(), batch.sim.exercise_dates)
    }

    /// Stride for a grid of `nf` fine steps with `ex` exercise dates.
    pub fn stride_for(&self, nf: usize, ex: usize) -> Result<usize> {
        let nk = self.kernel_steps;
        if nk == 0 || nf % nk != 0 {
            return Err(Error::Grid(format!("kernel steps {nk} must divide fine steps {nf}")));
        }
        if nk % ex != 0 {
            return Err(Error::Grid(format!(
                "kernel steps {nk} must be a multiple of exercise dates {ex}"
            )));
        }
        Ok(nf / nk)
    }

    /// Kernel-grid index of each exercise date.
    pub fn date_indices(&self, batch: &PathBatch) -> Result<Vec<usize>> {
        let stride = self.stride(batch)?;
        Ok(batch.exercise_idx.iter().map(|k| k / stride).collect())
    }
}

/// Per-channel multiplicative scaling applied to increments before solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScaling {
    pub factors: Vec<f64>,
    pub quantile: f64,
}

fn channel_values(batch: &PathBatch, i: usize, ch: KernelChannel, stride: usize, nk: usize) -> Vec<f64> {
    let node = |k: usize| k * stride;
    match ch {
        KernelChannel::QuadraticVariation => {
            let qv = batch
                .stopped(i, batch.fine_steps())
                .expect("full horizon")
                .quadratic_variation();
            (0..=nk).map(|k| qv[node(k)]).collect()
        }
        KernelChannel::Time => (0..=nk).map(|k| batch.times[node(k)]).collect(),
        other => {
            let field = match other {
                KernelChannel::VolBrownian => Field::VolBrownian,
                KernelChannel::OrthBrownian => Field::OrthBrownian,
                KernelChannel::LogPrice => Field::LogPrice,
                _ => Field::Vol,
            };
            let row = batch.field(field).row(i);
            (0..=nk).map(|k| row[node(k)]).collect()
        }
    }
}

impl ChannelScaling {
    pub fn identity(dim: usize) -> Self {
        Self {
            factors: vec![1.0; dim],
            quantile: f64::NAN,
        }
    }

    /// Factor `1 / q` per channel, `q` the `quantile` of per-path total variation.
    pub fn fit(batch: &PathBatch, spec: &KernelLiftSpec, quantile: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&quantile) {
            return Err(Error::Config(format!("scaling quantile {quantile} outside [0, 1]")));
        }
        let stride = spec.stride(batch)?;
        let nk = spec.kernel_steps;
        let m = batch.num_paths();
        let factors = spec
            .channels
            .iter()
            .map(|&ch| {
                let mut tv: Vec<f64> = (0..m)
                    .map(|i| {
                        let v = channel_values(batch, i, ch, stride, nk);
                        v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
                    })
                    .collect();
                tv.sort_by(f64::total_cmp);
                let pos = ((m - 1) as f64 * quantile).round() as usize;
                let q = tv[pos];
                if q > 0.0 && q.is_finite() {
                    1.0 / q
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { factors, quantile })
    }
}

/// Scaled kernel-grid increments of every path plus the driver increments.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPaths {
    pub dim: usize,
    pub steps: usize,
    /// Kernel grid spacing in years.
    pub dt: f64,
    incs: Vec<f64>,
    dw: Vec<f64>,
    db: Vec<f64>,
}

impl LiftedPaths {
    pub fn build(batch: &PathBatch, spec: &KernelLiftSpec, scaling: &ChannelScaling) -> Result<Self> {
        if scaling.factors.len() != spec.dim() {
            return Err(Error::Dimension("scaling does not match lift channels".into()));
        }
        let stride = spec.stride(batch)?;
        let nk = spec.kernel_steps;
        let d = spec.dim();
        let m = batch.num_paths();
        let mut incs = vec![0.0; m * nk * d];
        for i in 0..m {
            for (c, &ch) in spec.channels.iter().enumerate() {
                let v = channel_values(batch, i, ch, stride, nk);
                for k in 0..nk {
                    incs[(i * nk + k) * d + c] = (v[k + 1] - v[k]) * scaling.factors[c];
                }
            }
        }
        let drv = |f: Field| -> Vec<f64> {
            let arr = batch.field(f);
            let mut out = Vec::with_capacity(m * nk);
            for i in 0..m {
                let row = arr.row(i);
                out.extend((0..nk).map(|k| row[(k + 1) * stride] - row[k * stride]));
            }
            out
        };
        let incs_ok = incs.iter().all(|v| v.is_finite());
        if !incs_ok {
            return Err(Error::Data("non-finite kernel lift".into()));
        }
        Ok(Self {
            dim: d,
            steps: nk,
            dt: batch.dt() * stride as f64,
            incs,
            dw: drv(Field::VolBrownian),
            db: drv(Field::OrthBrownian),
        })
    }

    /// Build directly from increments (`M × steps × dim`) and driver increments.
    pub fn from_increments(
        dim: usize,
        steps: usize,
        dt: f64,
        incs: Vec<f64>,
        dw: Vec<f64>,
        db: Vec<f64>,
    ) -> Result<Self> {
        let m = dw.len() / steps.max(1);
        if incs.len() != m * steps * dim || dw.len() != m * steps || db.len() != dw.len() {
            return Err(Error::Dimension("inconsistent lifted path buffers".into()));
        }
        Ok(Self {
            dim,
            steps,
            dt,
            incs,
            dw,
            db,
        })
    }

    pub fn len(&self) -> usize {
        self.dw.len() / self.steps.max(1)
    }

    /// The paths at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Index(format!("path {bad} outside lift of {}", self.len())));
        }
        let (s, d) = (self.steps, self.dim);
        let mut incs = Vec::with_capacity(indices.len() * s * d);
        let mut dw = Vec::with_capacity(indices.len() * s);
        let mut db = Vec::with_capacity(indices.len() * s);
        for &i in indices {
            incs.extend_from_slice(self.increments(i, s));
            dw.extend_from_slice(&self.dw[i * s..(i + 1) * s]);
            db.extend_from_slice(&self.db[i * s..(i + 1) * s]);
        }
        Ok(Self {
            dim: d,
            steps: s,
            dt: self.dt,
            incs,
            dw,
            db,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Increments of path `i` on the first `upto` kernel steps.
    pub fn increments(&self, i: usize, upto: usize) -> &[f64] {
        let start = i * self.steps * self.dim;
        &self.incs[start..start + upto * self.dim]
    }

    /// Driver increments of path `i` on the kernel grid.
    pub fn driver(&self, i: usize, field: Field) -> Result<&[f64]> {
        let src = match field {
            Field::VolBrownian => &self.dw,
            Field::OrthBrownian => &self.db,
            _ => return Err(Error::Config("martingale drivers are W or B".into())),
        };
        Ok(&src[i * self.steps..(i + 1) * self.steps])
    }
}
