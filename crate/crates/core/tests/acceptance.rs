//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Select criteria with
//! `ROUGHSTOP_ACCEPTANCE=1,4,7`; set `ROUGHSTOP_ACCEPTANCE_STRICT=1` to turn
//! any FAIL into a non-zero exit status.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roughstop::experiment::{
    csv_string, run_correlation_study, run_discretization_study, run_feature_importance, run_price_table,
    run_ridge_sweep, run_sample_size_study, BackendKind, ExperimentConfig, PriceRow, Runner,
};
use roughstop::kernel::{goursat_kernel, GoursatConfig};
use roughstop::models::{
    black_scholes_put, cashflows, simulate, simulate_rough_heston_with_variance, CashflowMatrix, ModelParams,
    SimConfig, VolModel,
};
use roughstop::regress::{
    conjugate_gradient, dual_minimize, dual_objective, kernel_ridge, mse, Activation, DualConfig, FeatureMatrix, Mlp,
};
use roughstop::signature::{
    apply_functional, chen_product, exp_signature, log_signature, lyndon_words, segment_signature, shuffle_product,
    tensor_len, witt_dimension, Augmentation, AugmentedPath, LinearFunctional, LyndonBasis, Word,
};
use roughstop::stopping::{
    fit_dual, fit_primal_design, stopping_value, upper_bound, DualBackend, LinearPrimal, PrimalBackend, PrimalOptions,
    SE_MULTIPLIER,
};

/// Outcome of one criterion: pass flag plus a one-line summary of the evidence.
struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn all_pass(parts: Vec<Outcome>) -> Outcome {
    let pass = parts.iter().all(|o| o.pass);
    let detail = parts
        .iter()
        .map(|o| format!("{}{}", if o.pass { "" } else { "[x] " }, o.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn preset(name: &str, overrides: &[&str]) -> ExperimentConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::resolve(Some(name), None, &o).expect("shipped preset resolves")
}

fn random_path(rng: &mut ChaCha8Rng, segments: usize, dim: usize, scale: f64) -> AugmentedPath {
    let times: Vec<f64> = (0..=segments).map(|k| k as f64 / segments as f64).collect();
    let mut values = vec![0.0; dim];
    for k in 0..segments {
        for c in 0..dim {
            let prev = values[k * dim + c];
            values.push(prev + scale * rng.random_range(-1.0..1.0));
        }
    }
    AugmentedPath::new(times, values, dim, Augmentation::None).unwrap()
}

fn full_signature(p: &AugmentedPath, level: usize) -> roughstop::signature::TruncatedSignature {
    segment_signature(p, 0, p.len() - 1, level).unwrap()
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

fn signature_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 200;
    let (mut chen, mut shuffle, mut roundtrip, mut structure) = (0, 0, 0, 0);
    for _ in 0..cases {
        let dim = rng.random_range(1..=3);
        let segments = rng.random_range(2..8);
        let p = random_path(&mut rng, segments, dim, 0.8);
        let n = p.len() - 1;
        let split = rng.random_range(0..=n);
        let whole = segment_signature(&p, 0, n, 4).unwrap();
        let ab = chen_product(
            &segment_signature(&p, 0, split, 4).unwrap(),
            &segment_signature(&p, split, n, 4).unwrap(),
        )
        .unwrap();
        chen += rel_close(ab.coeffs(), whole.coeffs(), 1e-12) as usize;

        let inc: Vec<f64> = (0..dim).map(|c| p.point(n)[c] - p.point(0)[c]).collect();
        structure += (whole.coeffs()[0] == 1.0
            && whole.coeffs().len() == tensor_len(dim, 4)
            && rel_close(whole.level_block(1), &inc, 1e-14)) as usize;

        let sig6 = full_signature(&p, 6);
        let word = |rng: &mut ChaCha8Rng| {
            let len = rng.random_range(0..=3);
            Word::new((0..len).map(|_| rng.random_range(1..=dim as u8)).collect())
        };
        let l1 = LinearFunctional::word(dim, word(&mut rng), rng.random_range(-2.0..2.0)).unwrap();
        let l2 = LinearFunctional::word(dim, word(&mut rng), rng.random_range(-2.0..2.0)).unwrap();
        let lhs = apply_functional(&l1, &sig6).unwrap() * apply_functional(&l2, &sig6).unwrap();
        let rhs = apply_functional(&shuffle_product(&l1, &l2).unwrap(), &sig6).unwrap();
        shuffle += ((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs())) as usize;

        let log = log_signature(&whole).unwrap();
        let back = exp_signature(&log).unwrap();
        roundtrip += (log.coeffs()[0] == 0.0 && rel_close(back.coeffs(), whole.coeffs(), 1e-12)) as usize;
    }
    let mut dims = true;
    for d in 1..=4usize {
        for k in 0..=6usize {
            let closed = if d == 1 {
                k + 1
            } else {
                (d.pow(k as u32 + 1) - 1) / (d - 1)
            };
            dims &= tensor_len(d, k) == closed;
            dims &= lyndon_words(d, k).len() == witt_dimension(d, k);
            dims &= LyndonBasis::new(d, k).words().len() == witt_dimension(d, k);
        }
    }
    let ok = chen == cases && shuffle == cases && roundtrip == cases && structure == cases && dims;
    Outcome::new(
        ok,
        format!(
            "{cases} random paths: Chen {chen}, shuffle {shuffle}, exp/log {roundtrip}, grading {structure}; \
             dimension formulas {}",
            if dims { "ok" } else { "MISMATCH" }
        ),
    )
}

fn goursat_vs_signatures() -> Outcome {
    // Unit-variance random walks on [0, 1], sixteen linear pieces per channel.
    let segments = 16;
    let scale = (3.0 / segments as f64).sqrt();
    let worst_at = |refine: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        (0..10)
            .map(|_| {
                let x = random_path(&mut rng, segments, 2, scale);
                let y = random_path(&mut rng, segments, 2, scale);
                let pde = goursat_kernel(&x, &y, GoursatConfig { refine }).unwrap().terminal();
                (pde - full_signature(&x, 10).inner(&full_signature(&y, 10)).unwrap()).abs()
            })
            .fold(0.0, f64::max)
    };
    let worst = worst_at(2);
    let needed = [2usize, 4, 8, 16].into_iter().find(|&r| worst_at(r) < 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_line: f64 = 0.0;
    for _ in 0..5 {
        let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let seg = |d: [f64; 2]| AugmentedPath::new(vec![0.0, 1.0], vec![0.0, 0.0, d[0], d[1]], 2, Augmentation::None);
        let s = a[0] * b[0] + a[1] * b[1];
        let mut closed = 0.0;
        let mut term: f64 = 1.0;
        for n in 0..40 {
            if n > 0 {
                term *= s / (n * n) as f64;
            }
            closed += term;
        }
        let pde = goursat_kernel(&seg(a).unwrap(), &seg(b).unwrap(), GoursatConfig { refine: 512 })
            .unwrap()
            .terminal();
        worst_line = worst_line.max((pde - closed).abs());
    }
    all_pass(vec![
        Outcome::new(
            worst < 1e-3,
            format!(
                "10 random d=2 pairs, one refinement: max |k_PDE − <sig≤10, sig≤10>| = {worst:.2e} (< 1e-3; \
                 tolerance first met at refine {needed:?})"
            ),
        ),
        Outcome::new(
            worst_line < 1e-6,
            format!("linear paths vs Σ s^n/(n!)²: max error {worst_line:.2e} (< 1e-6)"),
        ),
    ])
}

fn degeneration() -> Outcome {
    let mut parts = Vec::new();
    let sim = |fine_steps, paths, seed| SimConfig {
        fine_steps,
        exercise_dates: 12,
        paths,
        seed,
        antithetic: false,
    };
    for h in [0.07, 0.5] {
        let mut p = ModelParams::rough_bergomi(h);
        if let VolModel::RoughBergomi { eta, .. } = &mut p.model {
            *eta = 0.0;
        }
        let b = simulate(&p, &sim(120, 1 << 14, 31)).unwrap();
        let e = cashflows(&b, 100.0).european(false);
        let bs = black_scholes_put(100.0, 100.0, p.rate, 0.3, 1.0);
        parts.push(Outcome::new(
            (e.mean - bs).abs() <= SE_MULTIPLIER * e.se,
            format!(
                "Bergomi η=0 H={h}: {:.4} vs Black–Scholes {bs:.4} (3se {:.4})",
                e.mean,
                SE_MULTIPLIER * e.se
            ),
        ));
    }
    let p = ModelParams::rough_heston(0.5);
    let (b, raw) = simulate_rough_heston_with_variance(&p, &sim(120, 256, 32)).unwrap();
    let VolModel::RoughHeston {
        mean_reversion,
        theta,
        nu,
        v0,
        ..
    } = p.model
    else {
        unreachable!()
    };
    let dt = 1.0 / 120.0;
    let mut worst: f64 = 0.0;
    for i in 0..256 {
        let mut v: f64 = v0;
        for k in 0..120 {
            let dw = b.w[(i, k + 1)] - b.w[(i, k)];
            v += mean_reversion * (theta - v) * dt + nu * v.max(0.0).sqrt() * dw;
            worst = worst.max((v - raw[(i, k + 1)]).abs());
        }
    }
    parts.push(Outcome::new(
        worst < 1e-10,
        format!("Heston H=0.5 vs classical Euler on shared increments: max node error {worst:.1e} (< 1e-10)"),
    ));
    all_pass(parts)
}

fn european_anchors() -> Outcome {
    let runner = Runner::uncached();
    let parts = [("table1", 7.73), ("table2", 7.99), ("table3", 2.66)]
        .into_iter()
        .map(|(name, target)| {
            let cfg = preset(name, &[]);
            let test = runner.batch(&cfg.model, &cfg.sampling.test()).unwrap();
            let e = cashflows(&test, 100.0).european(cfg.sampling.antithetic);
            Outcome::new(
                (e.mean - target).abs() <= 0.15,
                format!(
                    "{} H={:?}: E = {:.3} ± {:.3} (3se) vs {target} ± 0.15",
                    cfg.model.name(),
                    cfg.model.hurst().unwrap(),
                    e.mean,
                    SE_MULTIPLIER * e.se
                ),
            )
        })
        .collect();
    all_pass(parts)
}

fn binomial_toy() -> Outcome {
    let toy = common::binomial_toy();
    let feats: Vec<FeatureMatrix> = (0..toy.s.ncols())
        .map(|n| {
            let data = Array2::from_shape_fn((4, 2), |(i, j)| if j == 0 { 1.0 } else { toy.s[(i, n)] });
            FeatureMatrix::new(data, vec!["const".into(), "S".into()], true).unwrap()
        })
        .collect();
    let z = CashflowMatrix::from_matrix(100.0, vec![0.0, 1.0, 2.0], toy.z.clone());
    let backend = PrimalBackend::Linear(LinearPrimal::default());
    let (_, tau) = fit_primal_design(&z, &feats, &backend, PrimalOptions::default()).unwrap();
    let (primal, _) = stopping_value(toy.z.view(), &tau, false);
    let cfg = DualConfig {
        epochs: 3000,
        batch_size: 4,
        lr: 1e-2,
        lr_floor: 1e-3,
        smooth_max: Some(0.5),
        ..Default::default()
    };
    let dual = dual_minimize(toy.doob.view(), toy.z.view(), None, &cfg)
        .unwrap()
        .objective;
    all_pass(vec![
        Outcome::new(
            (primal - toy.y0).abs() < 1e-3,
            format!("primal {primal:.6} vs Y0 {:.6}", toy.y0),
        ),
        Outcome::new(
            (dual - toy.y0).abs() < 1e-3,
            format!("dual with Doob basis {dual:.6} vs Y0 {:.6}", toy.y0),
        ),
    ])
}

fn ordering_checks(name: &str, rows: &[PriceRow]) -> Vec<Outcome> {
    rows.iter()
        .map(|r| {
            let sandwich = r.lower <= r.upper + SE_MULTIPLIER * (r.lower_se + r.upper_se);
            let american = r.lower >= r.european - SE_MULTIPLIER * r.european_se;
            Outcome::new(
                sandwich && american,
                format!(
                    "{name}/{}/K={}: E {:.3}, L {:.3}, U {:.3} (3se L {:.3}, U {:.3})",
                    r.backend,
                    r.strike,
                    r.european,
                    r.lower,
                    r.upper,
                    SE_MULTIPLIER * r.lower_se,
                    SE_MULTIPLIER * r.upper_se
                ),
            )
        })
        .collect()
}

fn sandwich_on_shipped_configs() -> Outcome {
    let runner = Runner::uncached();
    let mut parts = Vec::new();
    let all = "backends=[\"linear\", \"deep\", \"kernel\"]";
    let reduced = [
        "sampling.train_paths=4096",
        "sampling.test_paths=4096",
        "strikes=[100.0]",
        all,
    ];
    for (name, overrides) in [
        ("smoke", vec![all]),
        ("table1", reduced.to_vec()),
        ("table2", reduced.to_vec()),
        ("table3", reduced.to_vec()),
    ] {
        let cfg = preset(name, &overrides);
        let out = run_price_table(&cfg, &runner).unwrap();
        parts.extend(ordering_checks(name, &out.rows));
        let train = runner.batch(&cfg.model, &cfg.sampling.train(0)).unwrap();
        let test = runner.batch(&cfg.model, &cfg.sampling.test()).unwrap();
        let zero = fit_dual(&train, cfg.strikes[0], &DualBackend::Zero).unwrap().model;
        let upper = upper_bound(&zero, &test).unwrap().estimate;
        let pm = cashflows(&test, cfg.strikes[0]).pathwise_max(cfg.sampling.antithetic);
        parts.push(Outcome::new(
            upper.mean == pm.mean && upper.se == pm.se,
            format!("{name}: B=0 dual {:.4} = pathwise max {:.4}", upper.mean, pm.mean),
        ));
    }
    all_pass(parts)
}

fn desk_table2_deep() -> Outcome {
    let cfg = preset("table2", &["strikes=[100.0]", "backends=[\"deep\"]"]);
    let r = run_price_table(&cfg, &Runner::uncached()).unwrap().rows.remove(0);
    all_pass(vec![
        Outcome::new(
            (8.3..=8.8).contains(&r.lower),
            format!("lower {:.3} ± {:.3} in [8.3, 8.8]", r.lower, SE_MULTIPLIER * r.lower_se),
        ),
        Outcome::new(
            (8.4..=9.1).contains(&r.upper),
            format!("upper {:.3} ± {:.3} in [8.4, 9.1]", r.upper, SE_MULTIPLIER * r.upper_se),
        ),
    ])
}

fn gap_trend() -> Outcome {
    let cfg = preset(
        "table2",
        &[
            "strikes=[100.0]",
            "backends=[\"linear\"]",
            "repeats=5",
            "sampling.train_paths=4096",
            "sampling.test_paths=4096",
            "studies.fine_steps=[60, 120, 240]",
            "studies.hursts=[0.07, 0.3, 0.5]",
        ],
    );
    let rows = run_discretization_study(&cfg, &Runner::uncached()).unwrap().rows;
    let mut parts = Vec::new();
    for h in &cfg.studies.hursts {
        let cells: Vec<_> = rows.iter().filter(|r| r.hurst == Some(*h)).collect();
        let monotone = cells
            .windows(2)
            .all(|w| w[1].gap <= w[0].gap + SE_MULTIPLIER * (w[0].gap_se.powi(2) + w[1].gap_se.powi(2)).sqrt());
        let trail = cells
            .iter()
            .map(|r| format!("{:.2}%", 100.0 * r.gap))
            .collect::<Vec<_>>()
            .join(" → ");
        parts.push(Outcome::new(monotone, format!("H={h}: ε {trail}")));
    }
    let last = |h: f64| rows.iter().rfind(|r| r.hurst == Some(h)).unwrap().gap;
    parts.push(Outcome::new(
        last(0.5) < last(0.07),
        format!(
            "N_f=240: ε(H=0.5) {:.2}% < ε(H=0.07) {:.2}%",
            100.0 * last(0.5),
            100.0 * last(0.07)
        ),
    ));
    all_pass(parts)
}

fn gradient_and_optimizers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = Array2::from_shape_simple_fn((16, 3), || rng.random_range(-1.0..1.0));
    let z: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut worst_grad: f64 = 0.0;
    for act in [Activation::Softplus, Activation::Tanh] {
        let net = Mlp::new(&[3, 6, 5, 1], act, 10).unwrap();
        let tape = net.forward_train(x.view());
        let out = tape.output();
        let grad_out = Array2::from_shape_fn((16, 1), |(i, _)| 2.0 * (out[(i, 0)] - z[i]) / 16.0);
        let analytic = net.backward(x.view(), &tape, grad_out.view()).flat();
        let base = net.params_flat();
        let h = 1e-5;
        for p in 0..base.len() {
            let mut shifted = net.clone();
            let mut bp = base.clone();
            bp[p] += h;
            shifted.set_params_flat(&bp).unwrap();
            let up = mse(&shifted, x.view(), &z);
            bp[p] -= 2.0 * h;
            shifted.set_params_flat(&bp).unwrap();
            let fd = (up - mse(&shifted, x.view(), &z)) / (2.0 * h);
            worst_grad = worst_grad.max((fd - analytic[p]).abs() / analytic[p].abs().max(1e-3));
        }
    }

    let (m, l) = (64, 8);
    let mut pts: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let lm: Vec<usize> = (0..l).map(|k| k * (m / l)).collect();
    for (j, &i) in lm.iter().enumerate() {
        pts[i] = -2.0 + 4.0 * (j as f64 + 0.5) / l as f64;
    }
    let kf = |a: f64, b: f64| (-3.0 * (a - b).powi(2)).exp();
    let k = Array2::from_shape_fn((m, l), |(i, j)| kf(pts[i], pts[lm[j]]));
    let r = Array2::from_shape_fn((l, l), |(i, j)| kf(pts[lm[i]], pts[lm[j]]));
    let zk: Vec<f64> = pts.iter().map(|x| x.sin()).collect();
    let lambda = 1e-3;
    let sol = kernel_ridge(k.view(), r.view(), &zk, lambda, lm).unwrap();
    let lhs = k.t().dot(&k) + &r * (m as f64 * lambda);
    let rhs: Vec<f64> = (0..l).map(|j| (0..m).map(|i| k[(i, j)] * zk[i]).sum()).collect();
    let cg = conjugate_gradient(&lhs, &rhs, 1e-15, 500);
    let worst_ridge = sol
        .alpha
        .iter()
        .zip(&cg)
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);

    let (m, n) = (6, 3);
    let basis = Array3::from_shape_fn(
        (m, 2, n),
        |(_, _, k)| if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) },
    );
    let zd = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..1.0));
    let exact = common::enumerate_dual_optimum(&basis, &zd);
    let cfg = DualConfig {
        epochs: 4000,
        batch_size: m,
        lr: 1e-2,
        lr_floor: 1e-3,
        ..Default::default()
    };
    let fit = dual_minimize(basis.view(), zd.view(), None, &cfg).unwrap();
    let check = dual_objective(basis.view(), zd.view(), &fit.beta).unwrap();
    all_pass(vec![
        Outcome::new(
            worst_grad < 1e-5,
            format!("MLP gradient vs central differences: max rel error {worst_grad:.1e} (< 1e-5)"),
        ),
        Outcome::new(
            worst_ridge < 1e-8,
            format!("kernel ridge vs CG: max rel error {worst_ridge:.1e} (< 1e-8)"),
        ),
        Outcome::new(
            check - exact < 1e-3 && check >= exact - 1e-9,
            format!("dual optimiser {check:.6} vs enumerated LP optimum {exact:.6} (< 1e-3)"),
        ),
    ])
}

fn all_study_csvs(cfg: &ExperimentConfig) -> Vec<String> {
    let runner = Runner::uncached();
    let mut linear = cfg.clone();
    linear.backends = vec![BackendKind::Linear];
    vec![
        csv_string(&run_price_table(cfg, &runner).unwrap().rows).unwrap(),
        csv_string(&run_ridge_sweep(cfg, &runner).unwrap().rows).unwrap(),
        csv_string(&run_sample_size_study(cfg, &runner).unwrap().rows).unwrap(),
        csv_string(&run_correlation_study(cfg, &runner).unwrap().rows).unwrap(),
        csv_string(&run_discretization_study(cfg, &runner).unwrap().rows).unwrap(),
        csv_string(&run_feature_importance(&linear, &runner).unwrap().rows).unwrap(),
    ]
}

fn determinism() -> Outcome {
    let cfg = preset("smoke", &["backends=[\"linear\", \"deep\", \"kernel\"]", "repeats=2"]);
    let first = all_study_csvs(&cfg);
    let second = all_study_csvs(&cfg);
    let same = first.iter().zip(&second).filter(|(a, b)| a == b).count();
    let bytes: usize = first.iter().map(String::len).sum();
    Outcome::new(
        same == first.len(),
        format!(
            "{same}/{} study CSVs byte-identical across reruns ({bytes} bytes)",
            first.len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "signature algebra", signature_algebra),
    (2, "Goursat kernel vs truncated signatures", goursat_vs_signatures),
    (3, "model degeneration", degeneration),
    (4, "European anchors", european_anchors),
    (5, "binomial toy exactness", binomial_toy),
    (
        6,
        "sandwich and ordering on shipped configs",
        sandwich_on_shipped_configs,
    ),
    (7, "desk-scale rough Bergomi H=0.07 deep bounds", desk_table2_deep),
    (8, "duality gap trend in N_f and H", gap_trend),
    (9, "gradient and optimiser checks", gradient_and_optimizers),
    (10, "determinism", determinism),
];

fn main() -> ExitCode {
    // `cargo test -- --list` and friends pass flags; this target has no sub-tests.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let selected: Option<Vec<u32>> = std::env::var("ROUGHSTOP_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let strict = std::env::var("ROUGHSTOP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut failed = Vec::new();
    let start = Instant::now();
    for &(id, name, run) in CRITERIA {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = run();
        println!(
            "{} criterion {id:>2} {name} [{:.1}s]: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {} failed {:?} in {:.0}s{}",
        failed.len(),
        failed,
        start.elapsed().as_secs_f64(),
        if strict {
            ""
        } else {
            " (set ROUGHSTOP_ACCEPTANCE_STRICT=1 to fail the run)"
        }
    );
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
