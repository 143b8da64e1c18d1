use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which monotone channel, if any, was prepended to the raw path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    Time,
    QuadraticVariation,
    None,
}

/// Augmentation request for [`augment_path`].
#[derive(Debug, Clone, Copy)]
pub enum AugmentMode<'a> {
    /// Prepend the time grid itself.
    Time,
    /// Prepend `∫_0^t a_u du` as a left-Riemann sum of the non-negative series `a`.
    QuadraticVariation(&'a [f64]),
    None,
}

/// A discretely sampled path, read as its piecewise-linear interpolant.
///
/// `values` is row-major with one row of `dim` channels per grid time; with
/// an augmentation the monotone channel sits in column 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
    tag: Augmentation,
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Grid("empty time grid".into()));
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Grid(format!(
            "time grid not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl AugmentedPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize, tag: Augmentation) -> Result<Self> {
        check_grid(&times)?;
        if dim == 0 || values.len() != times.len() * dim {
            return Err(Error::Dimension(format!(
                "{} values do not form {} rows of {dim} channels",
                values.len(),
                times.len()
            )));
        }
        let path = Self {
            times,
            values,
            dim,
            tag,
        };
        if tag != Augmentation::None {
            let mono = path.channel(0);
            if mono.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Domain("monotone channel decreases".into()));
            }
        }
        Ok(path)
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> Augmentation {
        self.tag
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    /// Increment from point `k` to point `k + 1`.
    pub fn increment_into(&self, k: usize, out: &mut [f64]) {
        let a = self.point(k);
        let b = self.point(k + 1);
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = y - x;
        }
    }

    /// All increments, row-major `(len-1) × dim`.
    pub fn increments(&self) -> Vec<f64> {
        let mut out = vec![0.0; (self.len().saturating_sub(1)) * self.dim];
        for k in 0..self.len().saturating_sub(1) {
            self.increment_into(k, &mut out[k * self.dim..(k + 1) * self.dim]);
        }
        out
    }

    /// The path restricted to grid points `0..=end`.
    pub fn prefix(&self, end: usize) -> Result<AugmentedPath> {
        if end >= self.len() {
            return Err(Error::Index(format!(
                "prefix end {end} outside path of {} points",
                self.len()
            )));
        }
        Ok(Self {
            times: self.times[..=end].to_vec(),
            values: self.values[..(end + 1) * self.dim].to_vec(),
            dim: self.dim,
            tag: self.tag,
        })
    }

    /// Multiply channel `c` by `factor[c]` (an affine rescale that keeps the
    /// signature's algebraic structure).
    pub fn scaled(&self, factors: &[f64]) -> Result<AugmentedPath> {
        if factors.len() != self.dim {
            return Err(Error::Dimension("one scale factor per channel".into()));
        }
        let mut values = self.values.clone();
        for row in values.chunks_mut(self.dim) {
            for (v, f) in row.iter_mut().zip(factors) {
                *v *= f;
            }
        }
        Ok(Self {
            times: self.times.clone(),
            values,
            dim: self.dim,
            tag: self.tag,
        })
    }
}

/// Prepend a monotone channel to an `m`-channel sampled path.
///
/// `values` is row-major with `times.len()` rows of `m` channels.
pub fn augment_path(values: &[f64], m: usize, times: &[f64], mode: AugmentMode) -> Result<AugmentedPath> {
    check_grid(times)?;
    let n = times.len();
    if m == 0 || values.len() != n * m {
        return Err(Error::Dimension(format!(
            "{} values do not form {n} rows of {m} channels",
            values.len()
        )));
    }
    let monotone: Option<Vec<f64>> = match mode {
        AugmentMode::None => None,
        AugmentMode::Time => Some(times.to_vec()),
        AugmentMode::QuadraticVariation(aux) => {
            if aux.len() != n {
                return Err(Error::Dimension(format!(
                    "auxiliary series has {} points, grid has {n}",
                    aux.len()
                )));
            }
            if let Some(bad) = aux.iter().find(|a| **a < 0.0 || !a.is_finite()) {
                return Err(Error::Domain(format!(
                    "quadratic-variation integrand must be non-negative, got {bad}"
                )));
            }
            let mut qv = Vec::with_capacity(n);
            let mut acc = 0.0;
            qv.push(0.0);
            for k in 0..n - 1 {
                acc += aux[k] * (times[k + 1] - times[k]);
                qv.push(acc);
            }
            Some(qv)
        }
    };
    let (tag, dim) = match mode {
        AugmentMode::None => (Augmentation::None, m),
        AugmentMode::Time => (Augmentation::Time, m + 1),
        AugmentMode::QuadraticVariation(_) => (Augmentation::QuadraticVariation, m + 1),
    };
    let out = match monotone {
        None => values.to_vec(),
        Some(mono) => {
            let mut out = Vec::with_capacity(n * dim);
            for (k, row) in values.chunks(m).enumerate() {
                out.push(mono[k]);
                out.extend_from_slice(row);
            }
            out
        }
    };
    AugmentedPath::new(times.to_vec(), out, dim, tag)
}
