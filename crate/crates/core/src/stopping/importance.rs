//! Permutation feature importance for trained primal and dual models.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{cashflows, path_rng, CashflowMatrix, PathBatch};
use crate::regress::{combine_basis, FeatureMatrix};
use crate::stats::McEstimate;

use super::dual::{pathwise_dual, DualBackend, DualKind, DualModel};
use super::features::{driver_increments, integrand_column, streamed_basis};
use super::primal::{forward_exercise, stopping_value, PrimalDesign, StoppingPolicy};

/// Mean absolute change of the value when one feature is shuffled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub score: f64,
    pub se: f64,
}

fn permutation(m: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..m).collect();
    p.shuffle(&mut path_rng(seed, stream));
    p
}

fn score(name: &str, diffs: &[f64]) -> FeatureScore {
    let est = McEstimate::from_samples(diffs, false);
    FeatureScore {
        name: name.to_string(),
        score: est.mean,
        se: if est.se.is_finite() { est.se } else { 0.0 },
    }
}

fn select_names(all: &[String], only: Option<&[String]>) -> Result<Vec<usize>> {
    match only {
        None => Ok((0..all.len()).collect()),
        Some(names) => names
            .iter()
            .map(|n| {
                all.iter()
                    .position(|a| a == n)
                    .ok_or_else(|| Error::UnknownFeature(n.clone()))
            })
            .collect(),
    }
}

/// Primal importance on a precomputed dense design: shuffle one column across
/// paths (the same permutation at every date) and re-evaluate the policy value.
pub fn primal_importance_on(
    policy: &StoppingPolicy,
    z: &CashflowMatrix,
    features: &[FeatureMatrix],
    only: Option<&[String]>,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureScore>> {
    let names = features
        .first()
        .map(|f| f.names.clone())
        .ok_or_else(|| Error::Dimension("empty design".into()))?;
    let cols = select_names(&names, only)?;
    let design = PrimalDesign::Dense(features.to_vec());
    let value = |d: &PrimalDesign| -> Result<f64> {
        let tau = forward_exercise(z.z.view(), &policy.continuation(d)?);
        Ok(stopping_value(z.z.view(), &tau, false).0)
    };
    let base = value(&design)?;
    let m = z.num_paths();
    cols.iter()
        .map(|&j| {
            let mut diffs = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let perm = permutation(m, seed, (j * repeats + r) as u64);
                let shuffled: Vec<FeatureMatrix> = features
                    .iter()
                    .map(|f| {
                        let mut data = f.data.clone();
                        let col = f.data.column(j);
                        for (i, &p) in perm.iter().enumerate() {
                            data[(i, j)] = col[p];
                        }
                        FeatureMatrix {
                            data,
                            names: f.names.clone(),
                        }
                    })
                    .collect();
                diffs.push((value(&PrimalDesign::Dense(shuffled))? - base).abs());
            }
            Ok(score(&names[j], &diffs))
        })
        .collect()
}

/// Primal importance of every (or the named) policy feature on `batch`.
pub fn primal_importance(
    policy: &StoppingPolicy,
    batch: &PathBatch,
    only: Option<&[String]>,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureScore>> {
    let z = cashflows(batch, policy.strike);
    match policy.design(batch)? {
        PrimalDesign::Dense(f) => primal_importance_on(policy, &z, &f, only, repeats, seed),
        PrimalDesign::Kernel(_) => Err(Error::Config("kernel policies have no named features".into())),
    }
}

/// Dual importance: shuffle one integrand feature across paths (the same
/// permutation at every fine step), re-integrate, and re-evaluate the objective.
pub fn dual_importance(
    model: &DualModel,
    batch: &PathBatch,
    only: Option<&[String]>,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureScore>> {
    let z = cashflows(batch, model.strike);
    let objective = |mart: &Array2<f64>| -> Result<f64> {
        let v = pathwise_dual(z.z.view(), mart.view())?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    };
    let m = batch.num_paths();
    match (&model.kind, &model.backend) {
        (DualKind::Linear { beta, column_scale }, DualBackend::Linear(cfg)) => {
            let names = cfg.features.names();
            let cols = select_names(&names, only)?;
            let base = objective(&model.martingale(batch)?)?;
            cols.iter()
                .map(|&j| {
                    let column = integrand_column(batch, &cfg.features, model.strike, j)?;
                    let mut diffs = Vec::with_capacity(repeats);
                    for r in 0..repeats {
                        let perm = permutation(m, seed, (j * repeats + r) as u64);
                        let shuffled = column.select(Axis(0), &perm);
                        let mut basis =
                            streamed_basis(batch, &cfg.features, model.strike, cfg.drivers, Some((j, &shuffled)))?;
                        for (k, mut lane) in basis.axis_iter_mut(Axis(1)).enumerate() {
                            let s = column_scale[k];
                            lane.mapv_inplace(|v| v / s);
                        }
                        diffs.push((objective(&combine_basis(basis.view(), beta))? - base).abs());
                    }
                    Ok(score(&names[j], &diffs))
                })
                .collect()
        }
        (DualKind::Deep { net, standardizer }, DualBackend::Deep(cfg)) => {
            let names = cfg.features.names();
            let cols = select_names(&names, only)?;
            let (feats, _) = super::dual::standardised_steps(batch, &cfg.features, model.strike, Some(standardizer))?;
            let inc = driver_increments(batch, cfg.drivers);
            let mart =
                |f: &ndarray::Array3<f64>| super::dual::network_martingale(net, f.view(), &inc, &batch.exercise_idx);
            let base = objective(&mart(&feats))?;
            cols.iter()
                .map(|&j| {
                    let mut diffs = Vec::with_capacity(repeats);
                    for r in 0..repeats {
                        let perm = permutation(m, seed, (j * repeats + r) as u64);
                        let mut shuffled = feats.clone();
                        for (i, &p) in perm.iter().enumerate() {
                            for u in 0..feats.dim().1 {
                                shuffled[(i, u, j)] = feats[(p, u, j)];
                            }
                        }
                        diffs.push((objective(&mart(&shuffled))? - base).abs());
                    }
                    Ok(score(&names[j], &diffs))
                })
                .collect()
        }
        _ => Err(Error::Config(format!(
            "{} dual models have no named integrand features",
            model.backend.name()
        ))),
    }
}
