use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::batch::{path_rng, stream_of, PathBatch, SimDiagnostics};
use super::bergomi::{draw, VolterraFactor};
use super::params::{ModelParams, SimConfig, VolModel};

/// One simulated path on the fine grid.
struct Row {
    s: Vec<f64>,
    x: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    b: Vec<f64>,
    negative_steps: usize,
}

fn log_euler(params: &ModelParams, dt: f64, var: &[f64], w: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = var.len() - 1;
    let rho = params.rho;
    let orth = (1.0 - rho * rho).max(0.0).sqrt();
    let mut x = Vec::with_capacity(n + 1);
    x.push(params.s0.ln());
    for k in 0..n {
        let vk = var[k].max(0.0);
        let dw = w[k + 1] - w[k];
        let db = b[k + 1] - b[k];
        let next = x[k] + (params.rate - 0.5 * vk) * dt + vk.sqrt() * (rho * dw + orth * db);
        x.push(next);
    }
    let s = x.iter().map(|v| v.exp()).collect();
    (x, s)
}

fn cumulative(incs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(incs.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for d in incs {
        acc += d;
        out.push(acc);
    }
    out
}

fn brownian_increments(seed: u64, i: usize, antithetic: bool, n: usize, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let (stream, sign) = stream_of(i, antithetic);
    let mut rng = path_rng(seed, stream);
    let sd = dt.sqrt();
    let mut normal = || {
        let g: f64 = StandardNormal.sample(&mut rng);
        sign * sd * g
    };
    let dw: Vec<f64> = (0..n).map(|_| normal()).collect();
    let db: Vec<f64> = (0..n).map(|_| normal()).collect();
    (dw, db)
}

fn assemble(
    params: &ModelParams,
    sim: &SimConfig,
    rows: Vec<Row>,
    mut diagnostics: SimDiagnostics,
) -> Result<PathBatch> {
    let n = sim.fine_steps;
    let m = rows.len();
    let cols = n + 1;
    let mut s = Vec::with_capacity(m * cols);
    let mut x = Vec::with_capacity(m * cols);
    let mut v = Vec::with_capacity(m * cols);
    let mut w = Vec::with_capacity(m * cols);
    let mut b = Vec::with_capacity(m * cols);
    let mut negative = 0usize;
    for r in rows {
        s.extend(r.s);
        x.extend(r.x);
        v.extend(r.v);
        w.extend(r.w);
        b.extend(r.b);
        negative += r.negative_steps;
    }
    if matches!(params.model, VolModel::RoughHeston { .. }) {
        let frac = negative as f64 / (m * n) as f64;
        diagnostics.negative_variance_fraction = Some(frac);
        if frac > 0.5 {
            diagnostics.warnings.push(format!(
                "variance state negative on {:.1}% of steps; consider a finer grid",
                100.0 * frac
            ));
        }
    }
    if s.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numerical("non-finite price in simulated batch".into()));
    }
    let shape = (m, cols);
    let to_arr = |data: Vec<f64>| Array2::from_shape_vec(shape, data).expect("shape checked");
    let dt = params.maturity / n as f64;
    Ok(PathBatch {
        params: params.clone(),
        sim: sim.clone(),
        times: (0..=n).map(|k| k as f64 * dt).collect(),
        exercise_idx: sim.exercise_indices(),
        s: to_arr(s),
        x: to_arr(x),
        v: to_arr(v),
        w: to_arr(w),
        b: to_arr(b),
        diagnostics,
    })
}

/// Rough Bergomi: exact joint law of `(Y, W)` on the grid, log-Euler price.
pub fn simulate_rough_bergomi(params: &ModelParams, sim: &SimConfig) -> Result<PathBatch> {
    params.validate()?;
    sim.validate()?;
    let VolModel::RoughBergomi { hurst, eta, xi0 } = params.model else {
        return Err(Error::Config(
            "simulate_rough_bergomi needs a rough Bergomi model".into(),
        ));
    };
    let n = sim.fine_steps;
    let dt = params.maturity / n as f64;
    let factor = VolterraFactor::new(hurst, params.maturity, n)?;
    let scale = eta * (2.0 * hurst).sqrt();
    let rows: Vec<Row> = (0..sim.paths)
        .into_par_iter()
        .map(|i| {
            let d = draw(&factor, sim.seed, i, sim.antithetic, dt);
            let var: Vec<f64> =
                d.y.iter()
                    .enumerate()
                    .map(|(k, y)| {
                        let t = k as f64 * dt;
                        xi0 * (scale * y - 0.5 * eta * eta * t.powf(2.0 * hurst)).exp()
                    })
                    .collect();
            let b = cumulative(&d.db);
            let (x, s) = log_euler(params, dt, &var, &d.w, &b);
            Row {
                s,
                x,
                v: var.iter().map(|v| v.sqrt()).collect(),
                w: d.w,
                b,
                negative_steps: 0,
            }
        })
        .collect();
    let diagnostics = SimDiagnostics {
        jitter: factor.jitter,
        ..Default::default()
    };
    assemble(params, sim, rows, diagnostics)
}

/// Exact Volterra step weights `w_m = ∫_{(m-1)Δ}^{mΔ} r^{H−1/2} dr`, `m = 1..n`.
pub fn volterra_weights(hurst: f64, dt: f64, n: usize) -> Vec<f64> {
    let p = hurst + 0.5;
    let scale = dt.powf(p) / p;
    // m^p − (m−1)^p = m^p·(1 − (1 − 1/m)^p), written without cancellation.
    (1..=n)
        .map(|m| {
            let m = m as f64;
            scale * m.powf(p) * -(p * (-1.0 / m).ln_1p()).exp_m1()
        })
        .collect()
}

/// Rough Heston variance and price with the Volterra–Euler scheme.
///
/// The linear drift uses the raw state so its mean equation is exact; the
/// square roots use `max(V, 0)`. Also returns the raw variance state.
pub fn simulate_rough_heston_with_variance(params: &ModelParams, sim: &SimConfig) -> Result<(PathBatch, Array2<f64>)> {
    params.validate()?;
    sim.validate()?;
    let VolModel::RoughHeston {
        hurst,
        mean_reversion,
        theta,
        nu,
        v0,
    } = params.model
    else {
        return Err(Error::Config("simulate_rough_heston needs a rough Heston model".into()));
    };
    let n = sim.fine_steps;
    let dt = params.maturity / n as f64;
    let weights = volterra_weights(hurst, dt, n);
    let rows: Vec<(Row, Vec<f64>)> = (0..sim.paths)
        .into_par_iter()
        .map(|i| {
            let (dw, db) = brownian_increments(sim.seed, i, sim.antithetic, n, dt);
            let mut var = Vec::with_capacity(n + 1);
            let mut forcing = Vec::with_capacity(n);
            var.push(v0);
            let mut negative = 0;
            for k in 1..=n {
                let j = k - 1;
                let vj: f64 = var[j];
                forcing.push(mean_reversion * (theta - vj) + nu * vj.max(0.0).sqrt() * dw[j] / dt);
                let acc: f64 = forcing.iter().enumerate().map(|(jj, g)| weights[k - jj - 1] * g).sum();
                let vk = v0 + acc;
                if vk < 0.0 {
                    negative += 1;
                }
                var.push(vk);
            }
            let w = cumulative(&dw);
            let b = cumulative(&db);
            let (x, s) = log_euler(params, dt, &var, &w, &b);
            let row = Row {
                s,
                x,
                v: var.iter().map(|v| v.max(0.0).sqrt()).collect(),
                w,
                b,
                negative_steps: negative,
            };
            (row, var)
        })
        .collect();
    let mut raw = Vec::with_capacity(sim.paths * (n + 1));
    let rows: Vec<Row> = rows
        .into_iter()
        .map(|(r, v)| {
            raw.extend(v);
            r
        })
        .collect();
    let batch = assemble(params, sim, rows, SimDiagnostics::default())?;
    let raw = Array2::from_shape_vec((sim.paths, n + 1), raw).expect("shape checked");
    Ok((batch, raw))
}

pub fn simulate_rough_heston(params: &ModelParams, sim: &SimConfig) -> Result<PathBatch> {
    simulate_rough_heston_with_variance(params, sim).map(|(b, _)| b)
}

pub fn simulate_black_scholes(params: &ModelParams, sim: &SimConfig) -> Result<PathBatch> {
    params.validate()?;
    sim.validate()?;
    let VolModel::BlackScholes { sigma } = params.model else {
        return Err(Error::Config(
            "simulate_black_scholes needs a Black-Scholes model".into(),
        ));
    };
    let n = sim.fine_steps;
    let dt = params.maturity / n as f64;
    let var = vec![sigma * sigma; n + 1];
    let rows: Vec<Row> = (0..sim.paths)
        .into_par_iter()
        .map(|i| {
            let (dw, db) = brownian_increments(sim.seed, i, sim.antithetic, n, dt);
            let w = cumulative(&dw);
            let b = cumulative(&db);
            let (x, s) = log_euler(params, dt, &var, &w, &b);
            Row {
                s,
                x,
                v: vec![sigma; n + 1],
                w,
                b,
                negative_steps: 0,
            }
        })
        .collect();
    assemble(params, sim, rows, SimDiagnostics::default())
}

/// Dispatch on the model kind.
pub fn simulate(params: &ModelParams, sim: &SimConfig) -> Result<PathBatch> {
    match params.model {
        VolModel::RoughBergomi { .. } => simulate_rough_bergomi(params, sim),
        VolModel::RoughHeston { .. } => simulate_rough_heston(params, sim),
        VolModel::BlackScholes { .. } => simulate_black_scholes(params, sim),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(paths: usize, seed: u64) -> SimConfig {
        SimConfig {
            fine_steps: 24,
            exercise_dates: 12,
            paths,
            seed,
            antithetic: false,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = ModelParams::rough_bergomi(0.07);
        let a = simulate(&p, &sim(16, 3)).unwrap();
        let b = simulate(&p, &sim(16, 3)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, &sim(16, 4)).unwrap();
        assert_ne!(a.s, c.s);
    }

    #[test]
    fn per_path_draws_independent_of_batch_size() {
        let p = ModelParams::rough_heston(0.1);
        let small = simulate(&p, &sim(4, 9)).unwrap();
        let large = simulate(&p, &sim(32, 9)).unwrap();
        for i in 0..4 {
            assert_eq!(small.s.row(i), large.s.row(i));
        }
    }

    #[test]
    fn positivity_and_alignment() {
        for p in [ModelParams::rough_bergomi(0.07), ModelParams::rough_heston(0.1)] {
            let b = simulate(&p, &sim(64, 1)).unwrap();
            assert!(b.s.iter().all(|s| *s > 0.0));
            assert!(b.v.iter().all(|v| *v >= 0.0));
            assert_eq!(b.exercise_idx.len(), 13);
            assert!((b.times[b.exercise_idx[6]] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn heston_without_vol_of_vol_stays_at_fixed_point() {
        let mut p = ModelParams::rough_heston(0.1);
        if let VolModel::RoughHeston { nu, .. } = &mut p.model {
            *nu = 0.0;
        }
        let (_, var) = simulate_rough_heston_with_variance(&p, &sim(4, 2)).unwrap();
        assert!(var.iter().all(|v| (v - 0.02).abs() < 1e-15));
    }

    #[test]
    fn antithetic_pairs_mirror_noise() {
        let p = ModelParams::black_scholes(0.2, 0.05);
        let s = SimConfig {
            antithetic: true,
            ..sim(4, 5)
        };
        let b = simulate(&p, &s).unwrap();
        for k in 0..=24 {
            assert_eq!(b.w[(0, k)], -b.w[(1, k)]);
            assert_eq!(b.b[(2, k)], -b.b[(3, k)]);
        }
    }
}
