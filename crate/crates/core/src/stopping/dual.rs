//! Dual (martingale) upper bounds: basis or network integrands trained on
//! one batch and re-integrated on an independent one.

use std::time::Instant;

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    dual_weights, kernel_martingales, landmark_block, sample_landmarks, self_diagonals, ChannelScaling, GoursatConfig,
    KernelLiftSpec, LiftedPaths,
};
use crate::models::{cashflows, path_rng, Drivers, PathBatch};
use crate::regress::{combine_basis, dual_minimize, Activation, Adam, DualConfig, Mlp, Penalty, Standardizer};
use crate::stats::McEstimate;

use super::features::{driver_increments, step_features, streamed_basis, FeatureSpec};
use super::primal::check_fresh;

/// Linear combination of signature/Laguerre integrand martingales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDual {
    pub features: FeatureSpec,
    #[serde(default)]
    pub drivers: Drivers,
    pub optimizer: DualConfig,
}

impl Default for LinearDual {
    fn default() -> Self {
        Self {
            features: FeatureSpec::linear_dual(3),
            drivers: Drivers::Both,
            optimizer: DualConfig::default(),
        }
    }
}

/// Network integrand `θ(X_u, V̂_{0,u})`, one output per driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepDual {
    pub features: FeatureSpec,
    #[serde(default)]
    pub drivers: Drivers,
    pub hidden_layers: usize,
    /// Hidden width is `features + 1 + extra_width`.
    pub extra_width: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Initial log-sum-exp temperature, annealed to a hard max.
    #[serde(default)]
    pub smooth_max: Option<f64>,
}

impl Default for DeepDual {
    fn default() -> Self {
        Self {
            features: FeatureSpec::deep_dual(4),
            drivers: Drivers::Both,
            hidden_layers: 3,
            extra_width: 32,
            epochs: 30,
            batch_size: 128,
            lr: 1e-3,
            seed: 0,
            smooth_max: None,
        }
    }
}

impl DeepDual {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let f = self.features.len();
        let width = f + 1 + self.extra_width;
        let mut sizes = vec![f];
        sizes.extend(std::iter::repeat_n(width, self.hidden_layers));
        sizes.push(self.drivers.fields().len());
        sizes
    }
}

/// Linear combination of kernel martingales against dual landmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDual {
    pub lift: KernelLiftSpec,
    pub landmarks: usize,
    /// Penalty `λ αᵀ R_T α` added to the dual objective.
    pub lambda: f64,
    #[serde(default)]
    pub goursat: GoursatConfig,
    pub scaling_quantile: f64,
    #[serde(default)]
    pub drivers: Drivers,
    pub optimizer: DualConfig,
    pub seed: u64,
    /// Integrate the cosine-normalised kernel instead of the raw one.
    #[serde(default = "default_true")]
    pub normalised_kernel: bool,
}

fn default_true() -> bool {
    true
}

impl Default for KernelDual {
    fn default() -> Self {
        Self {
            lift: KernelLiftSpec::standard(60),
            landmarks: 32,
            lambda: 0.0,
            goursat: GoursatConfig::default(),
            scaling_quantile: 0.9,
            drivers: Drivers::Both,
            optimizer: DualConfig::default(),
            seed: 0,
            normalised_kernel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualBackend {
    /// No martingale: the pathwise-maximum bound.
    Zero,
    Linear(LinearDual),
    Deep(DeepDual),
    Kernel(KernelDual),
}

impl DualBackend {
    pub fn name(&self) -> &'static str {
        match self {
            DualBackend::Zero => "zero",
            DualBackend::Linear(_) => "linear",
            DualBackend::Deep(_) => "deep",
            DualBackend::Kernel(_) => "kernel",
        }
    }
}

/// Trained martingale parametrisation.
#[derive(Debug, Clone, PartialEq)]
pub enum DualKind {
    Zero,
    Linear {
        beta: Vec<f64>,
        /// Each basis column is divided by its scale before weighting.
        column_scale: Vec<f64>,
    },
    Deep {
        net: Mlp,
        standardizer: Standardizer,
    },
    Kernel {
        beta: Vec<f64>,
        column_scale: Vec<f64>,
        bank: LiftedPaths,
        scaling: ChannelScaling,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    pub backend: DualBackend,
    pub strike: f64,
    pub train_seed: Option<u64>,
    pub kind: DualKind,
}

/// Trained dual model with its in-sample (upper-biased) objective.
#[derive(Debug, Clone)]
pub struct DualTrained {
    pub model: DualModel,
    pub objective: f64,
    /// Training objective after each epoch.
    pub history: Vec<f64>,
    pub offline_seconds: f64,
    pub training_seconds: f64,
}

/// Out-of-sample upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub estimate: McEstimate,
}

/// Pathwise `max_n (Z_{i,n} − M_{i,n})`.
pub fn pathwise_dual(z: ArrayView2<'_, f64>, martingale: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if z.dim() != martingale.dim() {
        return Err(Error::Dimension(format!(
            "cash flows {:?} vs martingale {:?}",
            z.dim(),
            martingale.dim()
        )));
    }
    Ok(z.rows()
        .into_iter()
        .zip(martingale.rows())
        .map(|(zr, mr)| zr.iter().zip(mr).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Divide each basis column by the standard deviation of its terminal value.
fn normalise_columns(basis: &mut Array3<f64>, scale: Option<&[f64]>) -> Vec<f64> {
    let (m, b, nd) = basis.dim();
    let scales: Vec<f64> = match scale {
        Some(s) => s.to_vec(),
        None => (0..b)
            .map(|k| {
                let col: Vec<f64> = (0..m).map(|i| basis[(i, k, nd - 1)]).collect();
                let sd = McEstimate::from_samples(&col, false).se * (m as f64).sqrt();
                if sd > 1e-300 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect(),
    };
    for (k, mut lane) in basis.axis_iter_mut(Axis(1)).enumerate() {
        let s = scales[k];
        lane.mapv_inplace(|v| v / s);
    }
    scales
}

fn kernel_setup(batch: &PathBatch, cfg: &KernelDual, scaling: &ChannelScaling) -> Result<(LiftedPaths, Vec<usize>)> {
    let lifted = LiftedPaths::build(batch, &cfg.lift, scaling)?;
    let dates = cfg.lift.date_indices(batch)?;
    Ok((lifted, dates))
}

/// Network integrand applied to standardised step features and integrated
/// against the drivers: `M × (N+1)`.
pub(crate) fn network_martingale(
    net: &Mlp,
    feats: ArrayView3<'_, f64>,
    increments: &[Array2<f64>],
    exercise_idx: &[usize],
) -> Array2<f64> {
    let (m, nf, f) = feats.dim();
    let nd = exercise_idx.len();
    let mut out = Array2::zeros((m, nd));
    let chunk = 256;
    for start in (0..m).step_by(chunk) {
        let end = (start + chunk).min(m);
        let x = feats
            .slice(ndarray::s![start..end, .., ..])
            .to_owned()
            .into_shape_with_order(((end - start) * nf, f))
            .expect("contiguous");
        let theta = net.forward(x.view());
        for (r, i) in (start..end).enumerate() {
            let mut acc = 0.0;
            let mut u = 0;
            for (n, &dn) in exercise_idx.iter().enumerate() {
                while u < dn {
                    for (c, d) in increments.iter().enumerate() {
                        acc += theta[(r * nf + u, c)] * d[(i, u)];
                    }
                    u += 1;
                }
                out[(i, n)] = acc;
            }
        }
    }
    out
}

pub(crate) fn standardised_steps(
    batch: &PathBatch,
    spec: &FeatureSpec,
    strike: f64,
    std: Option<&Standardizer>,
) -> Result<(Array3<f64>, Standardizer)> {
    let mut feats = step_features(batch, spec, strike)?;
    let (m, nf, f) = feats.dim();
    let standardizer = match std {
        Some(s) => s.clone(),
        None => {
            let flat = feats.view().into_shape_with_order((m * nf, f)).expect("contiguous");
            Standardizer::fit(flat)
        }
    };
    if standardizer.mean.len() != f {
        return Err(Error::Dimension(
            "standardizer does not match integrand features".into(),
        ));
    }
    for mut row in feats.lanes_mut(Axis(2)) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - standardizer.mean[j]) / standardizer.scale[j];
        }
    }
    Ok((feats, standardizer))
}

/// Train the deep dual integrand by mini-batch ADAM on the sample dual objective.
fn train_deep(
    cfg: &DeepDual,
    feats: ArrayView3<'_, f64>,
    increments: &[Array2<f64>],
    exercise_idx: &[usize],
    z: ArrayView2<'_, f64>,
) -> Result<(Mlp, Vec<f64>)> {
    let (m, nf, f) = feats.dim();
    let mut net = Mlp::new(&cfg.layer_sizes(), Activation::Relu, cfg.seed)?;
    // Start from the zero martingale.
    let last = net.weights.len() - 1;
    net.weights[last].fill(0.0);
    net.biases[last].fill(0.0);
    let c = increments.len();
    let nd = exercise_idx.len();
    let mut adam = Adam::new(cfg.lr);
    let mut rng = path_rng(cfg.seed, u64::MAX - 1);
    let mut order: Vec<usize> = (0..m).collect();
    let bs = cfg.batch_size.max(1);
    let mut history = Vec::with_capacity(cfg.epochs);
    let flat = feats.into_shape_with_order((m * nf, f)).expect("contiguous");
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let tau = cfg.smooth_max.and_then(|t0| {
            let t = t0 * (1.0 - epoch as f64 / cfg.epochs.max(1) as f64);
            (t > 1e-9).then_some(t)
        });
        let mut epoch_sum = 0.0;
        for chunk in order.chunks(bs) {
            let rows: Vec<usize> = chunk.iter().flat_map(|&i| (i * nf)..((i + 1) * nf)).collect();
            let x = flat.select(Axis(0), &rows);
            let tape = net.forward_train(x.view());
            let theta = tape.output();
            let mut grad = Array2::zeros((rows.len(), c));
            let inv_b = 1.0 / chunk.len() as f64;
            for (r, &i) in chunk.iter().enumerate() {
                let mut vals = vec![0.0; nd];
                let mut acc = 0.0;
                let mut u = 0;
                for (n, &dn) in exercise_idx.iter().enumerate() {
                    while u < dn {
                        for (ci, d) in increments.iter().enumerate() {
                            acc += theta[(r * nf + u, ci)] * d[(i, u)];
                        }
                        u += 1;
                    }
                    vals[n] = z[(i, n)] - acc;
                }
                let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = match tau {
                    Some(t) => {
                        let e: Vec<f64> = vals.iter().map(|v| ((v - best) / t).exp()).collect();
                        let s: f64 = e.iter().sum();
                        epoch_sum += best + t * s.ln();
                        e.iter().map(|v| v / s).collect()
                    }
                    None => {
                        epoch_sum += best;
                        let arg = vals.iter().position(|v| *v == best).unwrap_or(0);
                        (0..nd).map(|n| if n == arg { 1.0 } else { 0.0 }).collect()
                    }
                };
                // d/dθ_u of −M_{t_n} is −ΔD_u for u < t_n; weight by the
                // probability mass of dates after u.
                let mut tail = vec![0.0; nf + 1];
                for (n, &dn) in exercise_idx.iter().enumerate() {
                    tail[dn.min(nf)] += weights[n];
                }
                let mut run = 0.0;
                for u in (0..nf).rev() {
                    run += tail[u + 1];
                    if run == 0.0 {
                        continue;
                    }
                    for (ci, d) in increments.iter().enumerate() {
                        grad[(r * nf + u, ci)] = -inv_b * run * d[(i, u)];
                    }
                }
            }
            let g = net.backward(x.view(), &tape, grad.view());
            adam.step_mlp(&mut net, &g);
        }
        let obj = epoch_sum / m as f64;
        if !obj.is_finite() || !net.is_finite() {
            return Err(Error::Divergence(format!(
                "deep dual diverged at epoch {epoch} (lr {}, batch {}, layers {:?}); lower the learning rate",
                cfg.lr,
                cfg.batch_size,
                cfg.layer_sizes()
            )));
        }
        history.push(obj);
    }
    Ok((net, history))
}

/// Fit a dual martingale on the training batch.
pub fn fit_dual(train: &PathBatch, strike: f64, backend: &DualBackend) -> Result<DualTrained> {
    let z = cashflows(train, strike);
    let t0 = Instant::now();
    let seed = Some(train.sim.seed);
    let done = |kind: DualKind, objective: f64, history: Vec<f64>, offline: f64, t1: Instant| DualTrained {
        model: DualModel {
            backend: backend.clone(),
            strike,
            train_seed: seed,
            kind,
        },
        objective,
        history,
        offline_seconds: offline,
        training_seconds: t1.elapsed().as_secs_f64(),
    };
    match backend {
        DualBackend::Zero => {
            let t1 = Instant::now();
            let obj = z.pathwise_max(false).mean;
            Ok(done(DualKind::Zero, obj, Vec::new(), 0.0, t1))
        }
        DualBackend::Linear(cfg) => {
            let mut basis = streamed_basis(train, &cfg.features, strike, cfg.drivers, None)?;
            let column_scale = normalise_columns(&mut basis, None);
            let offline = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let fit = dual_minimize(basis.view(), z.z.view(), None, &cfg.optimizer)?;
            Ok(done(
                DualKind::Linear {
                    beta: fit.beta,
                    column_scale,
                },
                fit.objective,
                fit.history,
                offline,
                t1,
            ))
        }
        DualBackend::Deep(cfg) => {
            let (feats, standardizer) = standardised_steps(train, &cfg.features, strike, None)?;
            let inc = driver_increments(train, cfg.drivers);
            let offline = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let (net, history) = train_deep(cfg, feats.view(), &inc, &train.exercise_idx, z.z.view())?;
            let mart = network_martingale(&net, feats.view(), &inc, &train.exercise_idx);
            let vals = pathwise_dual(z.z.view(), mart.view())?;
            let obj = vals.iter().sum::<f64>() / vals.len() as f64;
            Ok(done(DualKind::Deep { net, standardizer }, obj, history, offline, t1))
        }
        DualBackend::Kernel(cfg) => {
            let scaling = ChannelScaling::fit(train, &cfg.lift, cfg.scaling_quantile)?;
            let (lifted, dates) = kernel_setup(train, cfg, &scaling)?;
            let diag = self_diagonals(&lifted, cfg.goursat)?;
            let weights = dual_weights(&diag, lifted.dt);
            let landmarks = sample_landmarks(&weights, cfg.landmarks, cfg.seed, u64::MAX)?;
            let fields = cfg.drivers.fields();
            let mut basis = kernel_martingales(
                &lifted,
                &lifted,
                &landmarks,
                &dates,
                fields,
                cfg.goursat,
                cfg.normalised_kernel,
            )?;
            let column_scale = normalise_columns(&mut basis, None);
            let penalty_matrix = if cfg.lambda > 0.0 {
                let mut r = landmark_block(&lifted, &landmarks, lifted.steps, cfg.goursat)?;
                if cfg.normalised_kernel {
                    let d: Vec<f64> = r.diag().to_vec();
                    r.indexed_iter_mut().for_each(|((a, b), v)| *v /= (d[a] * d[b]).sqrt());
                }
                let l = landmarks.len();
                let b = fields.len() * l;
                Some(Array2::from_shape_fn((b, b), |(p, q)| {
                    if p / l == q / l {
                        r[(p % l, q % l)] / (column_scale[p] * column_scale[q])
                    } else {
                        0.0
                    }
                }))
            } else {
                None
            };
            let offline = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let penalty = penalty_matrix.as_ref().map(|mtx| Penalty {
                lambda: cfg.lambda,
                matrix: mtx.view(),
            });
            let fit = dual_minimize(basis.view(), z.z.view(), penalty, &cfg.optimizer)?;
            let bank = lifted.subset(&landmarks)?;
            let kind = DualKind::Kernel {
                beta: fit.beta,
                column_scale,
                bank,
                scaling,
            };
            Ok(done(kind, fit.objective, fit.history, offline, t1))
        }
    }
}

impl DualModel {
    /// The trained martingale on `batch` at every exercise date, `M × (N+1)`.
    pub fn martingale(&self, batch: &PathBatch) -> Result<Array2<f64>> {
        let (m, nd) = (batch.num_paths(), batch.num_dates());
        match (&self.kind, &self.backend) {
            (DualKind::Zero, _) => Ok(Array2::zeros((m, nd))),
            (DualKind::Linear { beta, column_scale }, DualBackend::Linear(cfg)) => {
                let mut basis = streamed_basis(batch, &cfg.features, self.strike, cfg.drivers, None)?;
                normalise_columns(&mut basis, Some(column_scale));
                Ok(combine_basis(basis.view(), beta))
            }
            (DualKind::Deep { net, standardizer }, DualBackend::Deep(cfg)) => {
                let (feats, _) = standardised_steps(batch, &cfg.features, self.strike, Some(standardizer))?;
                let inc = driver_increments(batch, cfg.drivers);
                Ok(network_martingale(net, feats.view(), &inc, &batch.exercise_idx))
            }
            (
                DualKind::Kernel {
                    beta,
                    column_scale,
                    bank,
                    scaling,
                },
                DualBackend::Kernel(cfg),
            ) => {
                let (lifted, dates) = kernel_setup(batch, cfg, scaling)?;
                let idx: Vec<usize> = (0..bank.len()).collect();
                let mut basis = kernel_martingales(
                    &lifted,
                    bank,
                    &idx,
                    &dates,
                    cfg.drivers.fields(),
                    cfg.goursat,
                    cfg.normalised_kernel,
                )?;
                normalise_columns(&mut basis, Some(column_scale));
                Ok(combine_basis(basis.view(), beta))
            }
            _ => Err(Error::Config("dual model does not match its backend".into())),
        }
    }
}

/// Upper bound `mean_i max_n (Z − M)` on an independent test batch.
pub fn upper_bound(model: &DualModel, test: &PathBatch) -> Result<UpperBound> {
    check_fresh(model.train_seed, test)?;
    let z = cashflows(test, model.strike);
    let mart = model.martingale(test)?;
    let vals = pathwise_dual(z.z.view(), mart.view())?;
    Ok(UpperBound {
        estimate: McEstimate::from_samples(&vals, test.sim.antithetic),
    })
}
