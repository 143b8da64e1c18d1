//! Study drivers: price tables, ridge sweeps, sample/correlation/discretization
//! studies and feature importance, each returning CSV-ready rows.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{cashflows, simulate, CacheStatus, ModelParams, PathBatch, PathCache, SimConfig};
use crate::stats::{across_repeats, log_log_slope, McEstimate};
use crate::stopping::{
    dual_importance, duality_report, fit_dual, fit_primal, kernel_ridge_sweep, lower_bound, primal_importance,
    upper_bound, DualBackend, PriceReport, PrimalBackend, PrimalOptions, Timings,
};

use super::config::{BackendKind, ExperimentConfig, VERSION};

/// Where path batches come from.
#[derive(Debug, Clone, Default)]
pub struct Runner {
    pub cache: Option<PathCache>,
    /// Ignore cached entries and re-simulate.
    pub refresh: bool,
}

impl Runner {
    pub fn uncached() -> Self {
        Self::default()
    }

    pub fn with_cache(cache: PathCache) -> Self {
        Self {
            cache: Some(cache),
            refresh: false,
        }
    }

    pub fn batch(&self, params: &ModelParams, sim: &SimConfig) -> Result<PathBatch> {
        let Some(cache) = &self.cache else {
            return simulate(params, sim);
        };
        let (b, status) = cache.get_or_simulate(params, sim, self.refresh, || simulate(params, sim))?;
        if status == CacheStatus::Regenerated {
            log::warn!(
                "cache entry for seed {} failed verification and was regenerated",
                sim.seed
            );
        }
        for w in &b.diagnostics.warnings {
            log::warn!("{w}");
        }
        Ok(b)
    }
}

/// Wall-clock timings of one training, written to the sibling timings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub config_hash: String,
    pub version: String,
    pub study: String,
    pub label: String,
    pub offline_seconds: f64,
    pub primal_train_seconds: f64,
    pub dual_train_seconds: f64,
    pub evaluation_seconds: f64,
}

/// Rows of a study plus the timings of every training behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput<R> {
    pub rows: Vec<R>,
    pub timings: Vec<TimingRow>,
}

struct Ctx {
    hash: String,
    study: &'static str,
    timings: Vec<TimingRow>,
}

impl Ctx {
    fn new(cfg: &ExperimentConfig, study: &'static str) -> Self {
        Self {
            hash: cfg.hash(),
            study,
            timings: Vec::new(),
        }
    }

    fn record(&mut self, label: String, t: Timings) {
        self.timings.push(TimingRow {
            config_hash: self.hash.clone(),
            version: VERSION.to_string(),
            study: self.study.to_string(),
            label,
            offline_seconds: t.offline_seconds,
            primal_train_seconds: t.primal_train_seconds,
            dual_train_seconds: t.dual_train_seconds,
            evaluation_seconds: t.evaluation_seconds,
        });
    }

    fn finish<R>(self, rows: Vec<R>) -> StudyOutput<R> {
        StudyOutput {
            rows,
            timings: self.timings,
        }
    }
}

fn reseed_primal(b: &PrimalBackend, r: usize) -> PrimalBackend {
    let mut b = b.clone();
    match &mut b {
        PrimalBackend::Deep(c) => c.seed += r as u64,
        PrimalBackend::Kernel(c) => c.seed += r as u64,
        PrimalBackend::Linear(_) => {}
    }
    b
}

fn reseed_dual(b: &DualBackend, r: usize) -> DualBackend {
    let mut b = b.clone();
    match &mut b {
        DualBackend::Linear(c) => c.optimizer.seed += r as u64,
        DualBackend::Deep(c) => c.seed += r as u64,
        DualBackend::Kernel(c) => {
            c.seed += r as u64;
            c.optimizer.seed += r as u64;
        }
        DualBackend::Zero => {}
    }
    b
}

/// Fit primal and dual on `train` and evaluate both bounds on `test`.
pub fn price_once(
    train: &PathBatch,
    test: &PathBatch,
    strike: f64,
    primal: &PrimalBackend,
    dual: &DualBackend,
    opts: PrimalOptions,
) -> Result<PriceReport> {
    let fit = fit_primal(train, strike, primal, opts)?;
    let t = Instant::now();
    let lower = lower_bound(&fit.policy, test)?;
    let mut eval = t.elapsed().as_secs_f64();
    let trained = fit_dual(train, strike, dual)?;
    let t = Instant::now();
    let upper = upper_bound(&trained.model, test)?;
    eval += t.elapsed().as_secs_f64();
    let mut report = duality_report(
        fit.point_estimate,
        lower.value,
        lower.estimate.se,
        upper.estimate.mean,
        upper.estimate.se,
    );
    if !report.point_estimate.is_finite() || !report.lower_bound.is_finite() || !report.upper_bound.is_finite() {
        return Err(Error::Numerical(format!("non-finite bounds at strike {strike}")));
    }
    report.european = Some(cashflows(test, strike).european(test.sim.antithetic));
    report.train_seed = Some(train.sim.seed);
    report.test_seed = Some(test.sim.seed);
    report.config = serde_json::json!({ "primal": primal, "dual": dual, "strike": strike });
    report.timings = Timings {
        offline_seconds: fit.offline_seconds + trained.offline_seconds,
        primal_train_seconds: fit.training_seconds,
        dual_train_seconds: trained.training_seconds,
        evaluation_seconds: eval,
    };
    Ok(report)
}

/// Bounds aggregated over repeated trainings. With one repeat the errors are
/// Monte Carlo standard errors; otherwise they are across-repeat errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub point: f64,
    pub lower: McEstimate,
    pub upper: McEstimate,
    pub gap: McEstimate,
    pub violation: bool,
}

pub fn aggregate(reports: &[PriceReport]) -> Aggregate {
    let pick = |f: &dyn Fn(&PriceReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let point = across_repeats(&pick(&|r| r.point_estimate)).mean;
    let violation = reports.iter().any(|r| r.sandwich_violation);
    if let [r] = reports {
        return Aggregate {
            point,
            lower: McEstimate {
                mean: r.lower_bound,
                se: r.lower_se,
            },
            upper: McEstimate {
                mean: r.upper_bound,
                se: r.upper_se,
            },
            gap: McEstimate {
                mean: r.relative_gap,
                se: 0.0,
            },
            violation,
        };
    }
    Aggregate {
        point,
        lower: across_repeats(&pick(&|r| r.lower_bound)),
        upper: across_repeats(&pick(&|r| r.upper_bound)),
        gap: across_repeats(&pick(&|r| r.relative_gap)),
        violation,
    }
}

/// `repeats` trainings of one backend at one strike against a shared test batch.
fn repeated(
    ctx: &mut Ctx,
    runner: &Runner,
    cfg: &ExperimentConfig,
    test: &PathBatch,
    strike: f64,
    kind: BackendKind,
    label: &str,
) -> Result<Vec<PriceReport>> {
    let opts = PrimalOptions { itm_only: cfg.itm_only };
    (0..cfg.repeats)
        .map(|r| {
            let train = runner.batch(&cfg.model, &cfg.sampling.train(r))?;
            let report = price_once(
                &train,
                test,
                strike,
                &reseed_primal(&cfg.primal_backend(kind), r),
                &reseed_dual(&cfg.dual_backend(kind), r),
                opts,
            )?;
            log::info!(
                "{label} strike={strike} backend={} repeat={r}: lower {:.4} upper {:.4}",
                kind.name(),
                report.lower_bound,
                report.upper_bound
            );
            ctx.record(
                format!("{label} strike={strike} backend={} repeat={r}", kind.name()),
                report.timings,
            );
            Ok(report)
        })
        .collect()
}

/// One cell of a price table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub config_hash: String,
    pub version: String,
    pub model: String,
    pub hurst: Option<f64>,
    pub rho: f64,
    pub strike: f64,
    pub backend: String,
    pub repeats: usize,
    pub european: f64,
    pub european_se: f64,
    pub point: f64,
    pub lower: f64,
    pub lower_se: f64,
    pub upper: f64,
    pub upper_se: f64,
    pub gap: f64,
    pub gap_se: f64,
    pub violation: bool,
}

/// European, point estimate, bounds and gap for every strike and backend.
pub fn run_price_table(cfg: &ExperimentConfig, runner: &Runner) -> Result<StudyOutput<PriceRow>> {
    let mut ctx = Ctx::new(cfg, "price");
    let test = runner.batch(&cfg.model, &cfg.sampling.test())?;
    let mut rows = Vec::new();
    for &strike in &cfg.strikes {
        let euro = cashflows(&test, strike).european(test.sim.antithetic);
        for &kind in &cfg.backends {
            let reports = repeated(&mut ctx, runner, cfg, &test, strike, kind, "price")?;
            let a = aggregate(&reports);
            rows.push(PriceRow {
                config_hash: ctx.hash.clone(),
                version: VERSION.to_string(),
                model: cfg.model.name().to_string(),
                hurst: cfg.model.hurst(),
                rho: cfg.model.rho,
                strike,
                backend: kind.name().to_string(),
                repeats: cfg.repeats,
                european: euro.mean,
                european_se: euro.se,
                point: a.point,
                lower: a.lower.mean,
                lower_se: a.lower.se,
                upper: a.upper.mean,
                upper_se: a.upper.se,
                gap: a.gap.mean,
                gap_se: a.gap.se,
                violation: a.violation,
            });
        }
    }
    Ok(ctx.finish(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeRow {
    pub config_hash: String,
    pub version: String,
    pub strike: f64,
    pub lambda: f64,
    pub point: f64,
    pub lower: f64,
    pub lower_se: f64,
    /// `point − lower`; large values signal overfitting.
    pub spread: f64,
    /// Set on the penalty with the largest lower bound.
    pub best: bool,
}

/// Kernel primal point estimate and lower bound per ridge penalty, at the
/// first configured strike.
pub fn run_ridge_sweep(cfg: &ExperimentConfig, runner: &Runner) -> Result<StudyOutput<RidgeRow>> {
    let mut ctx = Ctx::new(cfg, "ridge");
    let lambdas = &cfg.studies.ridge_lambdas;
    if lambdas.is_empty() {
        return Err(Error::Config("ridge sweep needs at least one penalty".into()));
    }
    let strike = cfg.strikes[0];
    let test = runner.batch(&cfg.model, &cfg.sampling.test())?;
    let opts = PrimalOptions { itm_only: cfg.itm_only };
    let mut points = vec![Vec::new(); lambdas.len()];
    let mut lowers = vec![Vec::new(); lambdas.len()];
    let mut lower_se = vec![0.0; lambdas.len()];
    for r in 0..cfg.repeats {
        let train = runner.batch(&cfg.model, &cfg.sampling.train(r))?;
        let mut kc = cfg.kernel.primal.clone();
        kc.seed += r as u64;
        let t = Instant::now();
        let sweep = kernel_ridge_sweep(&train, &test, strike, &kc, opts, lambdas)?;
        ctx.record(
            format!("ridge strike={strike} repeat={r}"),
            Timings {
                primal_train_seconds: t.elapsed().as_secs_f64(),
                ..Timings::default()
            },
        );
        for (j, p) in sweep.iter().enumerate() {
            points[j].push(p.point_estimate);
            lowers[j].push(p.lower.value);
            lower_se[j] = p.lower.estimate.se;
        }
    }
    let mut rows: Vec<RidgeRow> = lambdas
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let point = across_repeats(&points[j]).mean;
            let lower = across_repeats(&lowers[j]);
            RidgeRow {
                config_hash: ctx.hash.clone(),
                version: VERSION.to_string(),
                strike,
                lambda,
                point,
                lower: lower.mean,
                lower_se: if cfg.repeats == 1 { lower_se[j] } else { lower.se },
                spread: point - lower.mean,
                best: false,
            }
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.lower.total_cmp(&b.1.lower))
        .map(|(j, _)| j)
        .expect("non-empty grid");
    rows[best].best = true;
    Ok(ctx.finish(rows))
}

/// Bounds at one grid point of a parameter study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub config_hash: String,
    pub version: String,
    pub study: String,
    pub backend: String,
    pub strike: f64,
    pub hurst: Option<f64>,
    pub rho: f64,
    pub train_paths: usize,
    pub fine_steps: usize,
    pub repeats: usize,
    pub lower: f64,
    pub lower_se: f64,
    pub upper: f64,
    pub upper_se: f64,
    pub gap: f64,
    pub gap_se: f64,
    /// Log-log slope of the gap against `fine_steps` across this row's Hurst
    /// parameter (discretization study only).
    pub slope: Option<f64>,
}

fn study_point(ctx: &mut Ctx, runner: &Runner, cfg: &ExperimentConfig, label: &str) -> Result<StudyRow> {
    let strike = cfg.strikes[0];
    let kind = cfg.backends[0];
    let test = runner.batch(&cfg.model, &cfg.sampling.test())?;
    let reports = repeated(ctx, runner, cfg, &test, strike, kind, label)?;
    let a = aggregate(&reports);
    Ok(StudyRow {
        config_hash: ctx.hash.clone(),
        version: VERSION.to_string(),
        study: ctx.study.to_string(),
        backend: kind.name().to_string(),
        strike,
        hurst: cfg.model.hurst(),
        rho: cfg.model.rho,
        train_paths: cfg.sampling.train_paths,
        fine_steps: cfg.sampling.fine_steps,
        repeats: cfg.repeats,
        lower: a.lower.mean,
        lower_se: a.lower.se,
        upper: a.upper.mean,
        upper_se: a.upper.se,
        gap: a.gap.mean,
        gap_se: a.gap.se,
        slope: None,
    })
}

/// Bounds against the training sample size (first strike, first backend).
pub fn run_sample_size_study(cfg: &ExperimentConfig, runner: &Runner) -> Result<StudyOutput<StudyRow>> {
    let mut ctx = Ctx::new(cfg, "sample_size");
    let mut rows = Vec::new();
    for &m in &cfg.studies.sample_sizes {
        let mut c = cfg.clone();
        c.sampling.train_paths = m;
        c.validate()?;
        rows.push(study_point(&mut ctx, runner, &c, &format!("sample_size m={m}"))?);
    }
    Ok(ctx.finish(rows))
}

/// Bounds against the spot–volatility correlation.
pub fn run_correlation_study(cfg: &ExperimentConfig, runner: &Runner) -> Result<StudyOutput<StudyRow>> {
    let mut ctx = Ctx::new(cfg, "correlation");
    let mut rows = Vec::new();
    for &rho in &cfg.studies.correlations {
        let mut c = cfg.clone();
        c.model.rho = rho;
        c.validate()?;
        rows.push(study_point(&mut ctx, runner, &c, &format!("correlation rho={rho}"))?);
    }
    Ok(ctx.finish(rows))
}

/// Duality gap over the fine-grid × Hurst grid, with a log-log slope per Hurst.
pub fn run_discretization_study(cfg: &ExperimentConfig, runner: &Runner) -> Result<StudyOutput<StudyRow>> {
    let mut ctx = Ctx::new(cfg, "discretization");
    let mut rows = Vec::new();
    for &h in &cfg.studies.hursts {
        if cfg.model.hurst().is_none() {
            return Err(Error::Config(
                "discretization study needs a model with a Hurst parameter".into(),
            ));
        }
        let start = rows.len();
        for &nf in &cfg.studies.fine_steps {
            let mut c = cfg.clone();
            c.model = c.model.with_hurst(h);
            c.sampling.fine_steps = nf;
            for lift in [&mut c.kernel.primal.lift, &mut c.kernel.dual.lift] {
                if nf % lift.kernel_steps != 0 {
                    lift.kernel_steps = nf;
                }
            }
            c.validate()?;
            rows.push(study_point(
                &mut ctx,
                runner,
                &c,
                &format!("discretization h={h} nf={nf}"),
            )?);
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows[start..].iter().map(|r| (r.fine_steps as f64, r.gap)).unzip();
        let slope = log_log_slope(&xs, &ys);
        for r in &mut rows[start..] {
            r.slope = slope.is_finite().then_some(slope);
        }
    }
    Ok(ctx.finish(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub config_hash: String,
    pub version: String,
    pub backend: String,
    /// `primal` or `dual`.
    pub side: String,
    pub rank: usize,
    pub feature: String,
    pub score: f64,
    pub se: f64,
}

/// Permutation importance of every named feature of the first backend, on the
/// test batch, ranked by score.
pub fn run_feature_importance(cfg: &ExperimentConfig, runner: &Runner) -> Result<StudyOutput<ImportanceRow>> {
    let mut ctx = Ctx::new(cfg, "importance");
    let kind = cfg.backends[0];
    if kind == BackendKind::Kernel {
        return Err(Error::Config(
            "feature importance needs a linear or deep backend".into(),
        ));
    }
    let strike = cfg.strikes[0];
    let train = runner.batch(&cfg.model, &cfg.sampling.train(0))?;
    let test = runner.batch(&cfg.model, &cfg.sampling.test())?;
    let opts = PrimalOptions { itm_only: cfg.itm_only };
    let fit = fit_primal(&train, strike, &cfg.primal_backend(kind), opts)?;
    let trained = fit_dual(&train, strike, &cfg.dual_backend(kind))?;
    let s = &cfg.studies;
    let t = Instant::now();
    let primal = primal_importance(&fit.policy, &test, None, s.importance_repeats, s.importance_seed)?;
    let dual = dual_importance(&trained.model, &test, None, s.importance_repeats, s.importance_seed)?;
    ctx.record(
        format!("importance strike={strike} backend={}", kind.name()),
        Timings {
            offline_seconds: fit.offline_seconds + trained.offline_seconds,
            primal_train_seconds: fit.training_seconds,
            dual_train_seconds: trained.training_seconds,
            evaluation_seconds: t.elapsed().as_secs_f64(),
        },
    );
    let mut rows = Vec::new();
    for (side, mut scores) in [("primal", primal), ("dual", dual)] {
        scores.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));
        for (rank, sc) in scores.into_iter().enumerate() {
            rows.push(ImportanceRow {
                config_hash: ctx.hash.clone(),
                version: VERSION.to_string(),
                backend: kind.name().to_string(),
                side: side.to_string(),
                rank: rank + 1,
                feature: sc.name,
                score: sc.score,
                se: sc.se,
            });
        }
    }
    Ok(ctx.finish(rows))
}
