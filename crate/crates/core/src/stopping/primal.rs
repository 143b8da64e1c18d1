//! Longstaff–Schwartz backward recursion over regression backends, and
//! out-of-sample evaluation of the resulting stopping rule.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    cross_gram, gram_blocks, primal_landmarks, self_diagonals, ChannelScaling, GoursatConfig, GramBlock,
    KernelLiftSpec, LiftedPaths,
};
use crate::models::{cashflows, CashflowMatrix, PathBatch};
use crate::regress::{
    kernel_ridge, linear_lsq, mlp_fit, predict_linear, Activation, FeatureMatrix, Mlp, RidgeSolution, Standardizer,
    TargetScale, TrainConfig,
};
use crate::stats::McEstimate;

use super::features::{exercise_features, FeatureSpec};

/// Linear regression on signature and Laguerre features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPrimal {
    pub features: FeatureSpec,
}

impl Default for LinearPrimal {
    fn default() -> Self {
        Self {
            features: FeatureSpec::linear_primal(3),
        }
    }
}

/// Feed-forward network on `{X_t, V̂^{≤K}}` with warm-started dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepPrimal {
    pub features: FeatureSpec,
    pub hidden_layers: usize,
    /// Hidden width is `features + 1 + extra_width`.
    pub extra_width: usize,
    /// Epochs at the last regression date.
    pub first_epochs: usize,
    /// Epochs at every earlier date, starting from the previous weights.
    pub later_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for DeepPrimal {
    fn default() -> Self {
        Self {
            features: FeatureSpec::deep_primal(4),
            hidden_layers: 2,
            extra_width: 32,
            first_epochs: 15,
            later_epochs: 3,
            batch_size: 128,
            lr: 1e-3,
            seed: 0,
        }
    }
}

impl DeepPrimal {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let f = self.features.len();
        let width = f + 1 + self.extra_width;
        let mut sizes = vec![f];
        sizes.extend(std::iter::repeat_n(width, self.hidden_layers));
        sizes.push(1);
        sizes
    }
}

/// Kernel ridge regression on Gram rows against Nyström landmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPrimal {
    pub lift: KernelLiftSpec,
    pub landmarks: usize,
    pub lambda: f64,
    #[serde(default)]
    pub goursat: GoursatConfig,
    /// Quantile of per-path total variation used to scale each channel.
    pub scaling_quantile: f64,
    /// Resample landmarks at every date (otherwise one set for all dates).
    pub per_date_landmarks: bool,
    pub seed: u64,
}

impl Default for KernelPrimal {
    fn default() -> Self {
        Self {
            lift: KernelLiftSpec::standard(60),
            landmarks: 32,
            lambda: 1e-3,
            goursat: GoursatConfig::default(),
            scaling_quantile: 0.9,
            per_date_landmarks: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimalBackend {
    Linear(LinearPrimal),
    Deep(DeepPrimal),
    Kernel(KernelPrimal),
}

impl PrimalBackend {
    pub fn name(&self) -> &'static str {
        match self {
            PrimalBackend::Linear(_) => "linear",
            PrimalBackend::Deep(_) => "deep",
            PrimalBackend::Kernel(_) => "kernel",
        }
    }
}

/// Options shared by all primal backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrimalOptions {
    /// Regress only on paths in the money at the date.
    #[serde(default)]
    pub itm_only: bool,
}

/// Fitted continuation value at one date.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuationModel {
    Constant(f64),
    Linear {
        beta: Vec<f64>,
        standardizer: Standardizer,
    },
    Deep {
        net: Mlp,
        standardizer: Standardizer,
        target: TargetScale,
    },
    Kernel {
        ridge: RidgeSolution,
    },
}

impl ContinuationModel {
    /// Continuation values for rows of a dense design.
    pub fn predict_dense(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        match self {
            ContinuationModel::Constant(c) => Ok(vec![*c; x.nrows()]),
            ContinuationModel::Linear { beta, standardizer } => Ok(predict_linear(standardizer.apply(x)?.view(), beta)),
            ContinuationModel::Deep {
                net,
                standardizer,
                target,
            } => {
                let y = net.forward(standardizer.apply(x)?.view());
                Ok(y.column(0).iter().map(|v| target.inverse(*v)).collect())
            }
            ContinuationModel::Kernel { .. } => Err(Error::Config("kernel models need Gram rows".into())),
        }
    }
}

/// Regression inputs at every exercise date.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimalDesign {
    /// Named feature columns per date.
    Dense(Vec<FeatureMatrix>),
    /// `M × L_n` Gram rows per date.
    Kernel(Vec<Array2<f64>>),
}

impl PrimalDesign {
    pub fn num_dates(&self) -> usize {
        match self {
            PrimalDesign::Dense(f) => f.len(),
            PrimalDesign::Kernel(k) => k.len(),
        }
    }
}

/// Landmark paths a kernel policy evaluates against.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    pub lift: KernelLiftSpec,
    pub scaling: ChannelScaling,
    pub goursat: GoursatConfig,
    pub paths: LiftedPaths,
    /// Per date, positions in `paths` of that date's landmarks.
    pub landmarks: Vec<Vec<usize>>,
}

impl KernelBank {
    fn from_training(
        lifted: &LiftedPaths,
        landmarks: &[Vec<usize>],
        lift: &KernelLiftSpec,
        scaling: &ChannelScaling,
        goursat: GoursatConfig,
    ) -> Result<Self> {
        let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
        for &j in landmarks.iter().flatten() {
            let next = pos.len();
            pos.entry(j).or_insert(next);
        }
        let mut order = vec![0; pos.len()];
        for (&j, &p) in &pos {
            order[p] = j;
        }
        Ok(Self {
            lift: lift.clone(),
            scaling: scaling.clone(),
            goursat,
            paths: lifted.subset(&order)?,
            landmarks: landmarks.iter().map(|s| s.iter().map(|j| pos[j]).collect()).collect(),
        })
    }

    /// Gram rows of `batch` against the bank at every date.
    pub fn design(&self, batch: &PathBatch) -> Result<Vec<Array2<f64>>> {
        let query = LiftedPaths::build(batch, &self.lift, &self.scaling)?;
        let dates = self.lift.date_indices(batch)?;
        cross_gram(&query, &self.paths, &self.landmarks, &dates, self.goursat)
    }
}

/// Per-date continuation models and the exercise rule built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingPolicy {
    pub backend: PrimalBackend,
    pub strike: f64,
    /// Simulation seed of the training batch, if fitted on one.
    pub train_seed: Option<u64>,
    /// Entry `n` is the model at date `n`; dates `0` and `N` have none.
    pub models: Vec<Option<ContinuationModel>>,
    pub bank: Option<KernelBank>,
    /// Feature names of the dense design, if any.
    pub feature_names: Vec<String>,
}

/// Exercise on `Z ≥ C`, never on a worthless payoff.
pub fn exercise(z: f64, continuation: f64) -> bool {
    z > 0.0 && z >= continuation
}

/// Backward recursion `τ_N = N`, `τ_n = n` if `exercise(Z_n, C_n)` else `τ_{n+1}`.
///
/// `fit(n, rows, targets)` regresses `targets` (the cash flows `Z_{τ_{n+1}}`
/// of `rows`) and returns continuation values for every path.
pub fn backward_induction<F>(z: ArrayView2<'_, f64>, itm_only: bool, mut fit: F) -> Result<Vec<usize>>
where
    F: FnMut(usize, &[usize], &[f64]) -> Result<Vec<f64>>,
{
    let (m, nd) = z.dim();
    if nd == 0 {
        return Err(Error::Dimension("cash flows need at least one date".into()));
    }
    let last = nd - 1;
    let mut tau = vec![last; m];
    for n in (1..last).rev() {
        let rows: Vec<usize> = (0..m).filter(|&i| !itm_only || z[(i, n)] > 0.0).collect();
        let targets: Vec<f64> = rows.iter().map(|&i| z[(i, tau[i])]).collect();
        let cont = if rows.is_empty() {
            vec![0.0; m]
        } else {
            fit(n, &rows, &targets)?
        };
        if cont.len() != m {
            return Err(Error::Dimension(format!(
                "continuation for {} of {m} paths",
                cont.len()
            )));
        }
        for i in 0..m {
            if exercise(z[(i, n)], cont[i]) {
                tau[i] = n;
            }
        }
    }
    Ok(tau)
}

/// First date `n ∈ 1..N` at which `exercise(Z_n, C_n)` holds, else `N`.
pub fn forward_exercise(z: ArrayView2<'_, f64>, continuation: &[Option<Vec<f64>>]) -> Vec<usize> {
    let (m, nd) = z.dim();
    let last = nd - 1;
    (0..m)
        .map(|i| {
            (1..last)
                .find(|&n| continuation[n].as_ref().is_some_and(|c| exercise(z[(i, n)], c[i])))
                .unwrap_or(last)
        })
        .collect()
}

pub fn stopped_cashflows(z: ArrayView2<'_, f64>, tau: &[usize]) -> Vec<f64> {
    tau.iter().enumerate().map(|(i, &n)| z[(i, n)]).collect()
}

/// `max(Z_{t_0}, mean Z_τ)` and the Monte Carlo estimate of the mean.
pub fn stopping_value(z: ArrayView2<'_, f64>, tau: &[usize], paired: bool) -> (f64, McEstimate) {
    let est = McEstimate::from_samples(&stopped_cashflows(z, tau), paired);
    let z0 = z.column(0).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (z0.max(est.mean), est)
}

/// Primal fit: the policy, its in-sample stopping dates and point estimate.
#[derive(Debug, Clone)]
pub struct PrimalFit {
    pub policy: StoppingPolicy,
    pub tau: Vec<usize>,
    pub point_estimate: f64,
    pub offline_seconds: f64,
    pub training_seconds: f64,
}

/// Out-of-sample lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// `max(Z_{t_0}, mean Z_τ)`.
    pub value: f64,
    /// Mean and standard error of the stopped cash flows.
    pub estimate: McEstimate,
}

fn select_rows(x: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    x.select(Axis(0), rows)
}

fn empty_models(nd: usize) -> Vec<Option<ContinuationModel>> {
    vec![None; nd]
}

/// Fit dense-design backends (linear or deep) on precomputed features.
pub fn fit_primal_design(
    z: &CashflowMatrix,
    features: &[FeatureMatrix],
    backend: &PrimalBackend,
    opts: PrimalOptions,
) -> Result<(Vec<Option<ContinuationModel>>, Vec<usize>)> {
    let nd = z.num_dates();
    if features.len() != nd {
        return Err(Error::Dimension(format!(
            "{} feature dates for {nd} cash-flow dates",
            features.len()
        )));
    }
    if features.iter().any(|f| f.rows() != z.num_paths()) {
        return Err(Error::Dimension("feature rows differ from paths".into()));
    }
    let mut models = empty_models(nd);
    let tau = match backend {
        PrimalBackend::Linear(_) => backward_induction(z.z.view(), opts.itm_only, |n, rows, y| {
            let x = select_rows(features[n].view(), rows);
            let std = Standardizer::fit(x.view());
            let beta = linear_lsq(std.apply(x.view())?.view(), y)?;
            let model = ContinuationModel::Linear {
                beta,
                standardizer: std,
            };
            let c = model.predict_dense(features[n].view())?;
            models[n] = Some(model);
            Ok(c)
        })?,
        PrimalBackend::Deep(cfg) => {
            let mut net = Mlp::new(&cfg.layer_sizes(), Activation::LeakyRelu, cfg.seed)?;
            let last = nd.saturating_sub(1);
            backward_induction(z.z.view(), opts.itm_only, |n, rows, y| {
                let x = select_rows(features[n].view(), rows);
                let std = Standardizer::fit(x.view());
                let target = TargetScale::fit(y);
                let ys: Vec<f64> = y.iter().map(|v| target.forward(*v)).collect();
                let train = TrainConfig {
                    epochs: if n + 1 == last {
                        cfg.first_epochs
                    } else {
                        cfg.later_epochs
                    },
                    batch_size: cfg.batch_size,
                    lr: cfg.lr,
                    seed: cfg.seed,
                };
                mlp_fit(&mut net, std.apply(x.view())?.view(), &ys, &train, n as u64)?;
                let model = ContinuationModel::Deep {
                    net: net.clone(),
                    standardizer: std,
                    target,
                };
                let c = model.predict_dense(features[n].view())?;
                models[n] = Some(model);
                Ok(c)
            })?
        }
        PrimalBackend::Kernel(_) => {
            return Err(Error::Config(
                "kernel backend regresses on Gram rows, not dense features".into(),
            ))
        }
    };
    Ok((models, tau))
}

/// Longstaff–Schwartz on a training batch.
pub fn fit_primal(train: &PathBatch, strike: f64, backend: &PrimalBackend, opts: PrimalOptions) -> Result<PrimalFit> {
    let z = cashflows(train, strike);
    let paired = train.sim.antithetic;
    let t0 = Instant::now();
    match backend {
        PrimalBackend::Linear(LinearPrimal { features: spec })
        | PrimalBackend::Deep(DeepPrimal { features: spec, .. }) => {
            let feats = exercise_features(train, spec, strike)?;
            let offline = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let (models, tau) = fit_primal_design(&z, &feats, backend, opts)?;
            let training = t1.elapsed().as_secs_f64();
            let (point, _) = stopping_value(z.z.view(), &tau, paired);
            Ok(PrimalFit {
                policy: StoppingPolicy {
                    backend: backend.clone(),
                    strike,
                    train_seed: Some(train.sim.seed),
                    models,
                    bank: None,
                    feature_names: spec.names(),
                },
                tau,
                point_estimate: point,
                offline_seconds: offline,
                training_seconds: training,
            })
        }
        PrimalBackend::Kernel(cfg) => {
            let prep = kernel_prep(train, cfg)?;
            let offline = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let (models, tau) = kernel_fit(&z, &prep, cfg.lambda, opts.itm_only)?;
            let training = t1.elapsed().as_secs_f64();
            let (point, _) = stopping_value(z.z.view(), &tau, paired);
            Ok(PrimalFit {
                policy: kernel_policy(backend.clone(), strike, train, models, prep.bank),
                tau,
                point_estimate: point,
                offline_seconds: offline,
                training_seconds: training,
            })
        }
    }
}

/// Training-side kernel quantities that do not depend on the ridge penalty.
struct KernelPrep {
    blocks: Vec<GramBlock>,
    bank: KernelBank,
}

fn kernel_prep(train: &PathBatch, cfg: &KernelPrimal) -> Result<KernelPrep> {
    let scaling = ChannelScaling::fit(train, &cfg.lift, cfg.scaling_quantile)?;
    let lifted = LiftedPaths::build(train, &cfg.lift, &scaling)?;
    let dates = cfg.lift.date_indices(train)?;
    let diag = self_diagonals(&lifted, cfg.goursat)?;
    let landmarks = primal_landmarks(&diag, &dates, cfg.landmarks, cfg.seed, cfg.per_date_landmarks)?;
    let blocks = gram_blocks(&lifted, &landmarks, &dates, cfg.goursat)?;
    let bank = KernelBank::from_training(&lifted, &landmarks, &cfg.lift, &scaling, cfg.goursat)?;
    Ok(KernelPrep { blocks, bank })
}

fn kernel_fit(
    z: &CashflowMatrix,
    prep: &KernelPrep,
    lambda: f64,
    itm_only: bool,
) -> Result<(Vec<Option<ContinuationModel>>, Vec<usize>)> {
    let mut models = empty_models(z.num_dates());
    let tau = backward_induction(z.z.view(), itm_only, |n, rows, y| {
        let block = &prep.blocks[n];
        let k = select_rows(block.k.view(), rows);
        let ridge = kernel_ridge(k.view(), block.r.view(), y, lambda, block.landmarks.clone())?;
        let c = ridge.predict(block.k.view());
        models[n] = Some(ContinuationModel::Kernel { ridge });
        Ok(c)
    })?;
    Ok((models, tau))
}

fn kernel_policy(
    backend: PrimalBackend,
    strike: f64,
    train: &PathBatch,
    models: Vec<Option<ContinuationModel>>,
    bank: KernelBank,
) -> StoppingPolicy {
    StoppingPolicy {
        backend,
        strike,
        train_seed: Some(train.sim.seed),
        models,
        bank: Some(bank),
        feature_names: Vec::new(),
    }
}

/// One penalty of a kernel ridge sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub lambda: f64,
    pub point_estimate: f64,
    pub lower: LowerBound,
}

/// Kernel primal fits over a grid of ridge penalties, sharing landmarks, Gram
/// blocks and the test design between penalties.
pub fn kernel_ridge_sweep(
    train: &PathBatch,
    test: &PathBatch,
    strike: f64,
    cfg: &KernelPrimal,
    opts: PrimalOptions,
    lambdas: &[f64],
) -> Result<Vec<RidgePoint>> {
    check_fresh(Some(train.sim.seed), test)?;
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::Config(format!("ridge penalty {bad} must be non-negative")));
    }
    let z = cashflows(train, strike);
    let zt = cashflows(test, strike);
    let prep = kernel_prep(train, cfg)?;
    let design = PrimalDesign::Kernel(prep.bank.design(test)?);
    lambdas
        .iter()
        .map(|&lambda| {
            let (models, tau) = kernel_fit(&z, &prep, lambda, opts.itm_only)?;
            let (point_estimate, _) = stopping_value(z.z.view(), &tau, train.sim.antithetic);
            let backend = PrimalBackend::Kernel(KernelPrimal { lambda, ..cfg.clone() });
            let policy = kernel_policy(backend, strike, train, models, prep.bank.clone());
            let tau_test = policy.stopping_dates(&zt, &design)?;
            let (value, estimate) = stopping_value(zt.z.view(), &tau_test, test.sim.antithetic);
            Ok(RidgePoint {
                lambda,
                point_estimate,
                lower: LowerBound { value, estimate },
            })
        })
        .collect()
}

/// Refuse to evaluate on the batch the model was trained on.
pub(crate) fn check_fresh(train_seed: Option<u64>, test: &PathBatch) -> Result<()> {
    if train_seed == Some(test.sim.seed) {
        return Err(Error::Config(format!(
            "test batch shares seed {} with the training batch; bounds need independent samples",
            test.sim.seed
        )));
    }
    Ok(())
}

impl StoppingPolicy {
    pub fn num_dates(&self) -> usize {
        self.models.len()
    }

    /// Regression inputs of `batch` at every date.
    pub fn design(&self, batch: &PathBatch) -> Result<PrimalDesign> {
        if batch.num_dates() != self.num_dates() {
            return Err(Error::Dimension(format!(
                "policy has {} dates, batch {}",
                self.num_dates(),
                batch.num_dates()
            )));
        }
        match (&self.backend, &self.bank) {
            (PrimalBackend::Kernel(_), Some(bank)) => Ok(PrimalDesign::Kernel(bank.design(batch)?)),
            (PrimalBackend::Kernel(_), None) => Err(Error::Config("kernel policy without landmark bank".into())),
            (PrimalBackend::Linear(LinearPrimal { features }), _)
            | (PrimalBackend::Deep(DeepPrimal { features, .. }), _) => {
                Ok(PrimalDesign::Dense(exercise_features(batch, features, self.strike)?))
            }
        }
    }

    /// Continuation values per date (`None` where the policy has no model).
    pub fn continuation(&self, design: &PrimalDesign) -> Result<Vec<Option<Vec<f64>>>> {
        if design.num_dates() != self.num_dates() {
            return Err(Error::Dimension("design dates differ from policy dates".into()));
        }
        self.models
            .iter()
            .enumerate()
            .map(|(n, model)| match (model, design) {
                (None, _) => Ok(None),
                (Some(ContinuationModel::Kernel { ridge }), PrimalDesign::Kernel(k)) => {
                    Ok(Some(ridge.predict(k[n].view())))
                }
                (Some(model), PrimalDesign::Dense(f)) => model.predict_dense(f[n].view()).map(Some),
                _ => Err(Error::Config("design does not match the policy backend".into())),
            })
            .collect()
    }

    pub fn stopping_dates(&self, z: &CashflowMatrix, design: &PrimalDesign) -> Result<Vec<usize>> {
        Ok(forward_exercise(z.z.view(), &self.continuation(design)?))
    }

    /// Stopping dates on a batch.
    pub fn stop(&self, batch: &PathBatch) -> Result<Vec<usize>> {
        let z = cashflows(batch, self.strike);
        self.stopping_dates(&z, &self.design(batch)?)
    }
}

/// Lower bound from applying `policy` to an independent test batch.
pub fn lower_bound(policy: &StoppingPolicy, test: &PathBatch) -> Result<LowerBound> {
    check_fresh(policy.train_seed, test)?;
    let z = cashflows(test, policy.strike);
    let tau = policy.stopping_dates(&z, &policy.design(test)?)?;
    let (value, estimate) = stopping_value(z.z.view(), &tau, test.sim.antithetic);
    Ok(LowerBound { value, estimate })
}
