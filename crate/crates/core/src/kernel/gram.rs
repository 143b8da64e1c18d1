//! Gram blocks against landmarks and kernel martingales.

use std::collections::BTreeMap;

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Field;

use super::goursat::{goursat_diagonal, GoursatConfig};
use super::lift::LiftedPaths;

/// Kernel evaluations at one exercise date.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBlock {
    pub date: usize,
    /// `M × L` values `k_{t_n,t_n}(X^{(i)}, X^{(j_l)})`.
    pub k: Array2<f64>,
    /// `L × L` landmark block.
    pub r: Array2<f64>,
    pub landmarks: Vec<usize>,
}

fn check_landmarks(bank: &LiftedPaths, landmarks: &[Vec<usize>]) -> Result<()> {
    for &j in landmarks.iter().flatten() {
        if j >= bank.len() {
            return Err(Error::Index(format!("landmark {j} outside bank of {}", bank.len())));
        }
    }
    Ok(())
}

/// Per-date `query × landmark` kernel matrices. `landmarks[n]` indexes the
/// `bank` paths used at date `n`; `dates[n]` is its kernel-grid index.
///
/// One solve per (query, distinct landmark) pair, truncated at the latest date
/// that landmark is used.
pub fn cross_gram(
    query: &LiftedPaths,
    bank: &LiftedPaths,
    landmarks: &[Vec<usize>],
    dates: &[usize],
    cfg: GoursatConfig,
) -> Result<Vec<Array2<f64>>> {
    if landmarks.len() != dates.len() {
        return Err(Error::Dimension("one landmark set per exercise date".into()));
    }
    if query.dim != bank.dim || query.steps != bank.steps {
        return Err(Error::Grid("query and landmark lifts differ".into()));
    }
    check_landmarks(bank, landmarks)?;
    let mut horizon: BTreeMap<usize, usize> = BTreeMap::new();
    for (n, set) in landmarks.iter().enumerate() {
        for &j in set {
            let h = horizon.entry(j).or_insert(0);
            *h = (*h).max(dates[n]);
        }
    }
    let rows: Vec<Vec<Vec<f64>>> = (0..query.len())
        .into_par_iter()
        .map(|i| {
            let mut diag_of: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for (&j, &h) in &horizon {
                let d = goursat_diagonal(query.increments(i, h), bank.increments(j, h), query.dim, cfg)?;
                diag_of.insert(j, d);
            }
            Ok(landmarks
                .iter()
                .enumerate()
                .map(|(n, set)| set.iter().map(|j| diag_of[j][dates[n]]).collect())
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(landmarks
        .iter()
        .enumerate()
        .map(|(n, set)| Array2::from_shape_fn((query.len(), set.len()), |(i, l)| rows[i][n][l]))
        .collect())
}

/// Training Gram blocks: the landmarks are rows of the same batch, so the
/// landmark block is read off the landmark rows and symmetrised.
pub fn gram_blocks(
    paths: &LiftedPaths,
    landmarks: &[Vec<usize>],
    dates: &[usize],
    cfg: GoursatConfig,
) -> Result<Vec<GramBlock>> {
    let ks = cross_gram(paths, paths, landmarks, dates, cfg)?;
    Ok(ks
        .into_iter()
        .enumerate()
        .map(|(n, k)| {
            let set = &landmarks[n];
            let l = set.len();
            let r = Array2::from_shape_fn((l, l), |(a, b)| 0.5 * (k[(set[a], b)] + k[(set[b], a)]));
            GramBlock {
                date: n,
                k,
                r,
                landmarks: set.clone(),
            }
        })
        .collect())
}

/// Landmark block `k_{t,t}(x_{j_a}, x_{j_b})` at kernel index `date` for
/// landmarks taken from `bank`.
pub fn landmark_block(bank: &LiftedPaths, landmarks: &[usize], date: usize, cfg: GoursatConfig) -> Result<Array2<f64>> {
    check_landmarks(bank, &[landmarks.to_vec()])?;
    let l = landmarks.len();
    let mut r = Array2::zeros((l, l));
    for a in 0..l {
        for b in 0..=a {
            let d = goursat_diagonal(
                bank.increments(landmarks[a], date),
                bank.increments(landmarks[b], date),
                bank.dim,
                cfg,
            )?;
            r[(a, b)] = d[date];
            r[(b, a)] = d[date];
        }
    }
    Ok(r)
}

/// Kernel martingales `M^{(i),l,c}_{t_n} = Σ_{u < t_n} k_{u,u}(X^{(j_l)}, X^{(i)}) ΔD^{(i),c}_u`
/// for each driver `c`, laid out `M × (drivers·L) × (N+1)` with driver-major columns.
///
/// With `normalised` the integrand is the cosine kernel
/// `k_{u,u}(X, Y) / √(k_{u,u}(X, X) k_{u,u}(Y, Y))`, which is bounded by one and
/// still adapted; the raw kernel grows super-exponentially in path length and
/// leaves the basis dominated by a handful of paths.
pub fn kernel_martingales(
    query: &LiftedPaths,
    bank: &LiftedPaths,
    landmarks: &[usize],
    dates: &[usize],
    drivers: &[Field],
    cfg: GoursatConfig,
    normalised: bool,
) -> Result<Array3<f64>> {
    if query.dim != bank.dim || query.steps != bank.steps {
        return Err(Error::Grid("martingale integrand and driver grids differ".into()));
    }
    if dates.iter().any(|&d| d > query.steps) {
        return Err(Error::Grid("exercise date beyond kernel grid".into()));
    }
    check_landmarks(bank, &[landmarks.to_vec()])?;
    let l = landmarks.len();
    let nd = dates.len();
    let steps = query.steps;
    let basis = drivers.len() * l;
    let self_diag = |p: &LiftedPaths, i: usize| -> Result<Vec<f64>> {
        let inc = p.increments(i, steps);
        goursat_diagonal(inc, inc, p.dim, cfg)
    };
    let bank_diag: Vec<Vec<f64>> = if normalised {
        landmarks
            .par_iter()
            .map(|&j| self_diag(bank, j))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let rows: Vec<Vec<f64>> = (0..query.len())
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; basis * nd];
            let drv: Vec<&[f64]> = drivers.iter().map(|f| query.driver(i, *f)).collect::<Result<_>>()?;
            let query_diag = if normalised { self_diag(query, i)? } else { Vec::new() };
            for (li, &j) in landmarks.iter().enumerate() {
                let mut diag = goursat_diagonal(query.increments(i, steps), bank.increments(j, steps), query.dim, cfg)?;
                if normalised {
                    for (u, d) in diag.iter_mut().enumerate() {
                        *d /= (query_diag[u] * bank_diag[li][u]).sqrt();
                    }
                }
                for (c, dd) in drv.iter().enumerate() {
                    let col = c * l + li;
                    let mut acc = 0.0;
                    let mut u = 0;
                    for (n, &dn) in dates.iter().enumerate() {
                        while u < dn {
                            acc += diag[u] * dd[u];
                            u += 1;
                        }
                        out[col * nd + n] = acc;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array3::from_shape_vec((query.len(), basis, nd), flat).expect("shape checked"))
}
