//! Adapted feature construction.
//!
//! Every value attached to fine index `u` is read through a [`StoppedPath`]
//! cut at `u`, so no feature can depend on data after the date it is used at.

use ndarray::{Array2, Array3, ArrayView3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Drivers, Field, PathBatch, StoppedPath};
use crate::regress::{FeatureMatrix, INTERCEPT};
use crate::signature::{tensor_len, SignatureAccumulator, Word};

/// Channels of the path whose signature is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigChannels {
    /// `(t, X_t)`.
    TimeLogPrice,
    /// `(t, X_t, φ(X_t)/K)` with the put payoff `φ` normalised by the strike.
    TimeLogPricePayoff,
    /// `(⟨X⟩_t, v_t)`.
    QvVol,
    /// `(t, v_t)`.
    TimeVol,
}

impl SigChannels {
    pub fn dim(&self) -> usize {
        match self {
            SigChannels::TimeLogPricePayoff => 3,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SigChannels::TimeLogPrice => "t,X",
            SigChannels::TimeLogPricePayoff => "t,X,phi",
            SigChannels::QvVol => "QV,v",
            SigChannels::TimeVol => "t,v",
        }
    }

    /// Increment over fine step `k → k+1`; `k + 1` must not exceed the cutoff.
    fn increment(&self, sp: &StoppedPath<'_>, k: usize, strike: f64, out: &mut [f64]) -> Result<()> {
        let dt = sp.at_time(k + 1)? - sp.at_time(k)?;
        let payoff = |x: f64| (strike - x.exp()).max(0.0) / strike;
        match self {
            SigChannels::TimeLogPrice => {
                out[0] = dt;
                out[1] = sp.at(Field::LogPrice, k + 1)? - sp.at(Field::LogPrice, k)?;
            }
            SigChannels::TimeLogPricePayoff => {
                let (x0, x1) = (sp.at(Field::LogPrice, k)?, sp.at(Field::LogPrice, k + 1)?);
                out[0] = dt;
                out[1] = x1 - x0;
                out[2] = payoff(x1) - payoff(x0);
            }
            SigChannels::QvVol => {
                let v0 = sp.at(Field::Vol, k)?;
                out[0] = v0 * v0 * dt;
                out[1] = sp.at(Field::Vol, k + 1)? - v0;
            }
            SigChannels::TimeVol => {
                out[0] = dt;
                out[1] = sp.at(Field::Vol, k + 1)? - sp.at(Field::Vol, k)?;
            }
        }
        Ok(())
    }
}

/// Feature layout: optional raw log-price, signature coefficients, and
/// Laguerre polynomials of the state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub channels: SigChannels,
    pub level: usize,
    /// Prepend the raw log-price `X_t`.
    pub log_price: bool,
    /// Total degree of Laguerre products in `(S_t/s_0, v_t/v_0)`; 0 disables.
    pub laguerre_degree: usize,
    /// Keep the level-0 signature coefficient as the intercept column.
    pub intercept: bool,
}

impl FeatureSpec {
    pub fn linear_primal(level: usize) -> Self {
        Self {
            channels: SigChannels::TimeLogPrice,
            level,
            log_price: false,
            laguerre_degree: 3,
            intercept: true,
        }
    }

    pub fn linear_dual(level: usize) -> Self {
        Self {
            channels: SigChannels::TimeLogPricePayoff,
            level,
            log_price: false,
            laguerre_degree: 3,
            intercept: true,
        }
    }

    pub fn deep_primal(level: usize) -> Self {
        Self {
            channels: SigChannels::QvVol,
            level,
            log_price: true,
            laguerre_degree: 0,
            intercept: false,
        }
    }

    pub fn deep_dual(level: usize) -> Self {
        Self {
            channels: SigChannels::TimeVol,
            level,
            log_price: true,
            laguerre_degree: 0,
            intercept: false,
        }
    }

    fn sig_len(&self) -> usize {
        tensor_len(self.channels.dim(), self.level)
    }

    fn laguerre_pairs(&self) -> Vec<(usize, usize)> {
        let p = self.laguerre_degree;
        let mut out = Vec::new();
        for total in 1..=p {
            for a in (0..=total).rev() {
                out.push((a, total - a));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        let skip = usize::from(!self.intercept);
        usize::from(self.log_price) + self.sig_len() - skip + self.laguerre_pairs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column names: `X` for the log-price, signature words over letters
    /// `1..d` (the empty word is the intercept `const`), `L(a,b)` for Laguerre terms.
    pub fn names(&self) -> Vec<String> {
        let d = self.channels.dim();
        let mut names = Vec::with_capacity(self.len());
        if self.log_price {
            names.push("X".to_string());
        }
        let start = usize::from(!self.intercept);
        for idx in start..self.sig_len() {
            let w = Word::from_flat_index(d, idx);
            names.push(if w.is_empty() {
                INTERCEPT.to_string()
            } else {
                w.to_string()
            });
        }
        for (a, b) in self.laguerre_pairs() {
            names.push(format!("L({a},{b})"));
        }
        names
    }
}

/// Laguerre polynomials `L_0..=L_p` at `x`.
pub fn laguerre(x: f64, p: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    if p >= 1 {
        out.push(1.0 - x);
    }
    for k in 1..p {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Running feature state of one path, advanced only through stopped views.
struct FeatureStream<'a> {
    spec: &'a FeatureSpec,
    strike: f64,
    acc: SignatureAccumulator,
    pos: usize,
    dx: Vec<f64>,
}

impl<'a> FeatureStream<'a> {
    fn new(spec: &'a FeatureSpec, strike: f64) -> Self {
        let d = spec.channels.dim();
        Self {
            spec,
            strike,
            acc: SignatureAccumulator::new(d, spec.level),
            pos: 0,
            dx: vec![0.0; d],
        }
    }

    /// Advance the signature to `sp.cutoff()` and write the features there.
    fn write(&mut self, sp: &StoppedPath<'_>, out: &mut [f64]) -> Result<()> {
        let cut = sp.cutoff();
        if cut < self.pos {
            return Err(Error::Index(format!(
                "feature stream at {} cannot rewind to {cut}",
                self.pos
            )));
        }
        while self.pos < cut {
            self.spec.channels.increment(sp, self.pos, self.strike, &mut self.dx)?;
            self.acc.push(&self.dx);
            self.pos += 1;
        }
        let mut c = 0;
        if self.spec.log_price {
            out[c] = sp.now(Field::LogPrice);
            c += 1;
        }
        let start = usize::from(!self.spec.intercept);
        for &v in &self.acc.coeffs()[start..] {
            out[c] = v;
            c += 1;
        }
        let p = self.spec.laguerre_degree;
        if p > 0 {
            let x = sp.now(Field::Price) / sp.params().s0;
            let y = sp.now(Field::Vol) / sp.at(Field::Vol, 0)?.max(f64::MIN_POSITIVE);
            let (lx, ly) = (laguerre(x, p), laguerre(y, p));
            for (a, b) in self.spec.laguerre_pairs() {
                out[c] = lx[a] * ly[b];
                c += 1;
            }
        }
        debug_assert_eq!(c, out.len());
        Ok(())
    }
}

fn rows_for_cutoffs(batch: &PathBatch, spec: &FeatureSpec, strike: f64, cutoffs: &[usize]) -> Result<Vec<Vec<f64>>> {
    let f = spec.len();
    (0..batch.num_paths())
        .into_par_iter()
        .map(|i| {
            let mut stream = FeatureStream::new(spec, strike);
            let mut row = vec![0.0; f * cutoffs.len()];
            for (c, &cut) in cutoffs.iter().enumerate() {
                let sp = batch.stopped(i, cut)?;
                stream.write(&sp, &mut row[c * f..(c + 1) * f])?;
            }
            Ok(row)
        })
        .collect()
}

/// Features at exercise date `n` only.
pub fn features_at(batch: &PathBatch, spec: &FeatureSpec, strike: f64, n: usize) -> Result<FeatureMatrix> {
    let cut = *batch
        .exercise_idx
        .get(n)
        .ok_or_else(|| Error::Index(format!("exercise date {n} outside 0..={}", batch.num_dates() - 1)))?;
    let rows = rows_for_cutoffs(batch, spec, strike, &[cut])?;
    let data = Array2::from_shape_vec((batch.num_paths(), spec.len()), rows.into_iter().flatten().collect())
        .expect("shape checked");
    FeatureMatrix::new(data, spec.names(), spec.intercept)
}

/// Features at every exercise date `0..=N` from one sweep per path.
pub fn exercise_features(batch: &PathBatch, spec: &FeatureSpec, strike: f64) -> Result<Vec<FeatureMatrix>> {
    let rows = rows_for_cutoffs(batch, spec, strike, &batch.exercise_idx)?;
    let (m, f) = (batch.num_paths(), spec.len());
    (0..batch.num_dates())
        .map(|n| {
            let data = Array2::from_shape_fn((m, f), |(i, j)| rows[i][n * f + j]);
            FeatureMatrix::new(data, spec.names(), spec.intercept)
        })
        .collect()
}

/// Left-point integrand features at every fine step `u = 0..N_f-1`,
/// shape `M × N_f × F`.
pub fn step_features(batch: &PathBatch, spec: &FeatureSpec, strike: f64) -> Result<Array3<f64>> {
    let cutoffs: Vec<usize> = (0..batch.fine_steps()).collect();
    let rows = rows_for_cutoffs(batch, spec, strike, &cutoffs)?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    if let Some(pos) = flat.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite integrand feature at flat index {pos}")));
    }
    Ok(Array3::from_shape_vec((batch.num_paths(), batch.fine_steps(), spec.len()), flat).expect("shape checked"))
}

/// Driver increments `ΔD_u = D_{u+1} − D_u`, one `M × N_f` array per driver.
pub fn driver_increments(batch: &PathBatch, drivers: Drivers) -> Vec<Array2<f64>> {
    drivers
        .fields()
        .iter()
        .map(|&f| {
            let a = batch.field(f);
            Array2::from_shape_fn((batch.num_paths(), batch.fine_steps()), |(i, u)| {
                a[(i, u + 1)] - a[(i, u)]
            })
        })
        .collect()
}

/// Euler martingales `M^{f,c}_{t_n} = Σ_{u < t_n} ψ_f(u) ΔD^c_u`, laid out
/// `M × (C·F) × (N+1)` with driver-major columns.
pub fn basis_martingales(
    integrand: ArrayView3<'_, f64>,
    increments: &[Array2<f64>],
    exercise_idx: &[usize],
) -> Result<Array3<f64>> {
    let (m, nf, f) = integrand.dim();
    if increments.iter().any(|d| d.dim() != (m, nf)) {
        return Err(Error::Grid("integrand and driver grids differ".into()));
    }
    if exercise_idx.iter().any(|&k| k > nf) {
        return Err(Error::Grid("exercise date beyond integration grid".into()));
    }
    let c = increments.len();
    let nd = exercise_idx.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; c * f * nd];
            let mut acc = vec![0.0; c * f];
            let mut u = 0;
            for (n, &dn) in exercise_idx.iter().enumerate() {
                while u < dn {
                    for (ci, d) in increments.iter().enumerate() {
                        let du = d[(i, u)];
                        for j in 0..f {
                            acc[ci * f + j] += integrand[(i, u, j)] * du;
                        }
                    }
                    u += 1;
                }
                for (col, &a) in acc.iter().enumerate() {
                    out[col * nd + n] = a;
                }
            }
            out
        })
        .collect();
    Ok(Array3::from_shape_vec((m, c * f, nd), rows.into_iter().flatten().collect()).expect("shape checked"))
}

/// Values of integrand column `col` at every fine step, `M × N_f`.
pub fn integrand_column(batch: &PathBatch, spec: &FeatureSpec, strike: f64, col: usize) -> Result<Array2<f64>> {
    if col >= spec.len() {
        return Err(Error::Index(format!("feature column {col} outside {}", spec.len())));
    }
    let cutoffs: Vec<usize> = (0..batch.fine_steps()).collect();
    let f = spec.len();
    let rows = rows_for_cutoffs(batch, spec, strike, &cutoffs)?;
    Ok(Array2::from_shape_fn(
        (batch.num_paths(), batch.fine_steps()),
        |(i, u)| rows[i][u * f + col],
    ))
}

/// Basis martingales of `spec` integrands computed path by path without
/// materialising the per-step features. `replace` substitutes one integrand
/// column by the given `M × N_f` values.
pub fn streamed_basis(
    batch: &PathBatch,
    spec: &FeatureSpec,
    strike: f64,
    drivers: Drivers,
    replace: Option<(usize, &Array2<f64>)>,
) -> Result<Array3<f64>> {
    let (m, nf, f) = (batch.num_paths(), batch.fine_steps(), spec.len());
    if let Some((col, vals)) = replace {
        if col >= f || vals.dim() != (m, nf) {
            return Err(Error::Dimension(
                "replacement integrand column has the wrong shape".into(),
            ));
        }
    }
    let fields = drivers.fields();
    let c = fields.len();
    let nd = batch.num_dates();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut stream = FeatureStream::new(spec, strike);
            let mut psi = vec![0.0; f];
            let mut acc = vec![0.0; c * f];
            let mut out = vec![0.0; c * f * nd];
            let mut next = 0;
            for u in 0..=nf {
                while next < nd && batch.exercise_idx[next] == u {
                    for (col, &a) in acc.iter().enumerate() {
                        out[col * nd + next] = a;
                    }
                    next += 1;
                }
                if u == nf {
                    break;
                }
                let sp = batch.stopped(i, u)?;
                stream.write(&sp, &mut psi)?;
                if let Some((col, vals)) = replace {
                    psi[col] = vals[(i, u)];
                }
                for (ci, &field) in fields.iter().enumerate() {
                    let d = batch.field(field);
                    let du = d[(i, u + 1)] - d[(i, u)];
                    for j in 0..f {
                        acc[ci * f + j] += psi[j] * du;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(Array3::from_shape_vec((m, c * f, nd), rows.into_iter().flatten().collect()).expect("shape checked"))
}
