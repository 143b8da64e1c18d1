use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the intercept column.
pub const INTERCEPT: &str = "const";

/// Regression design at one exercise date with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    pub names: Vec<String>,
}

impl FeatureMatrix {
    /// Validates finiteness and that the intercept column appears exactly once
    /// when `needs_intercept` is set.
    pub fn new(data: Array2<f64>, names: Vec<String>, needs_intercept: bool) -> Result<Self> {
        if data.ncols() != names.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} names",
                data.ncols(),
                names.len()
            )));
        }
        if let Some(((i, j), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("feature `{}` non-finite at row {i}", names[j])));
        }
        let count = names.iter().filter(|n| n.as_str() == INTERCEPT).count();
        if needs_intercept && count != 1 {
            return Err(Error::Config(format!("expected one intercept column, found {count}")));
        }
        Ok(Self { data, names })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }
}

/// Per-column z-scoring fitted on training data. Constant columns
/// (including the intercept) are left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![0.0; cols],
            scale: vec![1.0; cols],
        }
    }

    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean: Array1<f64> = x.sum_axis(Axis(0)) / n;
        let mut m = Vec::with_capacity(x.ncols());
        let mut s = Vec::with_capacity(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let mu = mean[j];
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 * (1.0 + mu.abs()) {
                m.push(mu);
                s.push(sd);
            } else {
                m.push(0.0);
                s.push(1.0);
            }
        }
        Self { mean: m, scale: s }
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "standardizer fitted on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (mu, sd) = (self.mean[j], self.scale[j]);
            col.mapv_inplace(|v| (v - mu) / sd);
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.scale[j];
        }
    }
}

/// Affine target scaling used by the network fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub scale: f64,
}

impl TargetScale {
    pub fn fit(z: &[f64]) -> Self {
        let n = z.len().max(1) as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        Self { mean, scale }
    }

    pub fn forward(&self, z: f64) -> f64 {
        (z - self.mean) / self.scale
    }

    pub fn inverse(&self, y: f64) -> f64 {
        self.mean + self.scale * y
    }
}
