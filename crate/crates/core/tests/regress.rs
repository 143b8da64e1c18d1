mod common;

use ndarray::{Array2, Array3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roughstop::regress::{
    conjugate_gradient, dual_minimize, dual_objective, kernel_ridge, linear_lsq, mlp_fit, mse, predict_linear,
    Activation, DualConfig, Mlp, TrainConfig,
};

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, f: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((m, f), || rng.random_range(-1.0..1.0))
}

#[test]
fn lsq_interpolates_targets_in_span() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phi = random_matrix(&mut rng, 50, 6);
    let beta: Vec<f64> = (0..6).map(|k| k as f64 - 2.5).collect();
    let z = predict_linear(phi.view(), &beta);
    let fit = linear_lsq(phi.view(), &z).unwrap();
    let resid: f64 = predict_linear(phi.view(), &fit)
        .iter()
        .zip(&z)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(resid < 1e-10);
}

#[test]
fn lsq_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let phi = random_matrix(&mut rng, 200, 10);
    let z: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
    let fit = linear_lsq(phi.view(), &z).unwrap();
    // Normal equations solved by Gaussian elimination with partial pivoting.
    let f = 10;
    let mut a = vec![vec![0.0; f + 1]; f];
    for i in 0..f {
        for j in 0..f {
            a[i][j] = (0..200).map(|r| phi[(r, i)] * phi[(r, j)]).sum();
        }
        a[i][f] = (0..200).map(|r| phi[(r, i)] * z[r]).sum();
    }
    for c in 0..f {
        let p = (c..f).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        for r in c + 1..f {
            let k = a[r][c] / a[c][c];
            let pivot = a[c].clone();
            for (x, p) in a[r][c..=f].iter_mut().zip(&pivot[c..=f]) {
                *x -= k * p;
            }
        }
    }
    let mut x = vec![0.0; f];
    for r in (0..f).rev() {
        x[r] = (a[r][f] - (r + 1..f).map(|j| a[r][j] * x[j]).sum::<f64>()) / a[r][r];
    }
    for (u, v) in fit.iter().zip(&x) {
        assert!((u - v).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn lsq_residual_is_orthogonal_to_columns(seed in any::<u64>(), m in 12usize..60, f in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_matrix(&mut rng, m, f);
        let z: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fit = linear_lsq(phi.view(), &z).unwrap();
        let resid: Vec<f64> = predict_linear(phi.view(), &fit).iter().zip(&z).map(|(a, b)| b - a).collect();
        let scale: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt() * (m as f64).sqrt();
        for j in 0..f {
            let ip: f64 = (0..m).map(|i| phi[(i, j)] * resid[i]).sum();
            prop_assert!(ip.abs() < 1e-8 * scale);
        }
    }
}

/// Random PSD kernel-like instance: Gaussian kernel on random points.
fn kernel_instance(m: usize, l: usize, seed: u64) -> (Array2<f64>, Array2<f64>, Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let lm: Vec<usize> = (0..l).map(|k| k * (m / l)).collect();
    // Landmarks on an even grid keep the Gram block well conditioned.
    for (j, &i) in lm.iter().enumerate() {
        pts[i] = -2.0 + 4.0 * (j as f64 + 0.5) / l as f64;
    }
    let kf = |a: f64, b: f64| (-3.0 * (a - b).powi(2)).exp();
    let k = Array2::from_shape_fn((m, l), |(i, j)| kf(pts[i], pts[lm[j]]));
    let r = Array2::from_shape_fn((l, l), |(i, j)| kf(pts[lm[i]], pts[lm[j]]));
    let z: Vec<f64> = pts
        .iter()
        .map(|x| x.sin() + 0.1 * rng.random_range(-1.0..1.0))
        .collect();
    (k, r, z, lm)
}

fn normal_system(k: &Array2<f64>, r: &Array2<f64>, z: &[f64], lambda: f64) -> (Array2<f64>, Vec<f64>) {
    let m = k.nrows() as f64;
    let lhs = k.t().dot(k) + r * (m * lambda);
    let rhs = (0..k.ncols())
        .map(|j| (0..k.nrows()).map(|i| k[(i, j)] * z[i]).sum())
        .collect();
    (lhs, rhs)
}

#[test]
fn ridge_matches_conjugate_gradient() {
    let (k, r, z, lm) = kernel_instance(64, 8, 3);
    let sol = kernel_ridge(k.view(), r.view(), &z, 1e-3, lm).unwrap();
    let (lhs, rhs) = normal_system(&k, &r, &z, 1e-3);
    let cg = conjugate_gradient(&lhs, &rhs, 1e-15, 500);
    for (a, b) in sol.alpha.iter().zip(&cg) {
        assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
    }
    // Normal-equation residual bound.
    let res: f64 = (0..8)
        .map(|i| ((0..8).map(|j| lhs[(i, j)] * sol.alpha[j]).sum::<f64>() - rhs[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(res < 1e-8 * norm);
}

#[test]
fn ridge_interpolates_when_all_samples_are_landmarks() {
    let m = 10;
    let (k, _, z, _) = kernel_instance(m, m, 4);
    let r = k.clone();
    let sol = kernel_ridge(k.view(), r.view(), &z, 0.0, (0..m).collect()).unwrap();
    for (f, t) in sol.predict(k.view()).iter().zip(&z) {
        assert!((f - t).abs() < 1e-6, "{f} vs {t}");
    }
}

#[test]
fn ridge_vanishes_under_heavy_penalty() {
    let (k, r, z, lm) = kernel_instance(64, 8, 5);
    let lambda = 1e8;
    let sol = kernel_ridge(k.view(), r.view(), &z, lambda, lm).unwrap();
    let (_, rhs) = normal_system(&k, &r, &z, 0.0);
    let ktz: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eig_min = {
        let rn = nalgebra::DMatrix::from_fn(8, 8, |i, j| r[(i, j)]);
        rn.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let norm: f64 = sol.alpha.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm <= ktz / (64.0 * lambda * eig_min) * (1.0 + 1e-9));
    assert!(norm < 1e-6);
}

#[test]
fn mlp_learns_linear_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_matrix(&mut rng, 4096, 4);
    let z: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| 1.5 * r[0] - 0.5 * r[1] + 0.25 * r[3] + 0.1)
        .collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
    let mut net = Mlp::new(&[4, 32, 1], Activation::LeakyRelu, 7).unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        seed: 8,
        ..Default::default()
    };
    let losses = mlp_fit(&mut net, x.view(), &z, &cfg, 0).unwrap();
    assert!(*losses.last().unwrap() < 1e-3 * var, "{:?}", losses.last());
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_matrix(&mut rng, 16, 3);
    let z: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    for act in [Activation::Softplus, Activation::Tanh] {
        let net = Mlp::new(&[3, 6, 5, 1], act, 10).unwrap();
        let tape = net.forward_train(x.view());
        let out = tape.output();
        let grad_out = Array2::from_shape_fn((16, 1), |(i, _)| 2.0 * (out[(i, 0)] - z[i]) / 16.0);
        let analytic = net.backward(x.view(), &tape, grad_out.view()).flat();
        let base = net.params_flat();
        let h = 1e-5;
        for _ in 0..10 {
            let p = rng.random_range(0..base.len());
            let mut plus = net.clone();
            let mut minus = net.clone();
            let mut bp = base.clone();
            bp[p] += h;
            plus.set_params_flat(&bp).unwrap();
            bp[p] -= 2.0 * h;
            minus.set_params_flat(&bp).unwrap();
            let fd = (mse(&plus, x.view(), &z) - mse(&minus, x.view(), &z)) / (2.0 * h);
            let rel = (fd - analytic[p]).abs() / analytic[p].abs().max(1e-3);
            assert!(rel < 1e-5, "{act:?} param {p}: {fd} vs {}", analytic[p]);
        }
    }
}

#[test]
fn mlp_training_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_matrix(&mut rng, 300, 3);
    let z: Vec<f64> = x.column(0).iter().map(|v| v * v).collect();
    let cfg = TrainConfig {
        epochs: 3,
        seed: 5,
        ..Default::default()
    };
    let mut a = Mlp::new(&[3, 8, 1], Activation::LeakyRelu, 1).unwrap();
    let mut b = a.clone();
    mlp_fit(&mut a, x.view(), &z, &cfg, 2).unwrap();
    mlp_fit(&mut b, x.view(), &z, &cfg, 2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn warm_start_single_epoch_is_competitive() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random_matrix(&mut rng, 2048, 3);
    let later: Vec<f64> = x.rows().into_iter().map(|r| (r[0] + 0.5 * r[1]).max(0.0)).collect();
    let earlier: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| (r[0] + 0.45 * r[1] + 0.05).max(0.0))
        .collect();
    let sizes = [3, 36, 36, 1];
    let cold_cfg = TrainConfig {
        epochs: 15,
        seed: 1,
        ..Default::default()
    };
    let mut warm = Mlp::new(&sizes, Activation::LeakyRelu, 2).unwrap();
    mlp_fit(&mut warm, x.view(), &later, &cold_cfg, 0).unwrap();
    let warm_loss = *mlp_fit(
        &mut warm,
        x.view(),
        &earlier,
        &TrainConfig {
            epochs: 1,
            ..cold_cfg.clone()
        },
        1,
    )
    .unwrap()
    .last()
    .unwrap();
    let mut cold = Mlp::new(&sizes, Activation::LeakyRelu, 3).unwrap();
    let cold_loss = *mlp_fit(&mut cold, x.view(), &earlier, &cold_cfg, 2)
        .unwrap()
        .last()
        .unwrap();
    assert!(warm_loss <= 1.5 * cold_loss, "warm {warm_loss} vs cold {cold_loss}");
}

#[test]
fn dual_with_constant_payoff_returns_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (m, b, n) = (64, 3, 4);
    let mut basis = Array3::zeros((m, b, n));
    for i in 0..m {
        for j in 0..b {
            let mut acc = 0.0;
            for k in 1..n {
                acc += if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                basis[(i, j, k)] = acc;
            }
        }
    }
    let z = Array2::from_elem((m, n), 2.5);
    let fit = dual_minimize(basis.view(), z.view(), None, &DualConfig::default()).unwrap();
    assert!((fit.objective - 2.5).abs() < 1e-12);
    assert!(fit.beta.iter().all(|v| *v == 0.0));
}

#[test]
fn dual_single_date_never_worse_than_zero_martingale() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (m, n) = (100, 2);
    let basis = Array3::from_shape_fn(
        (m, 1, n),
        |(_, _, k)| if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) },
    );
    let z = Array2::from_shape_fn((m, n), |(i, k)| if k == 0 { 0.0 } else { (i % 7) as f64 });
    let at_zero = dual_objective(basis.view(), z.view(), &[0.0]).unwrap();
    let mean_zt = (0..m).map(|i| z[(i, 1)]).sum::<f64>() / m as f64;
    assert!((at_zero - mean_zt).abs() < 1e-12);
    let fit = dual_minimize(basis.view(), z.view(), None, &DualConfig::default()).unwrap();
    assert!(fit.objective <= at_zero);
}

#[test]
fn dual_reaches_enumerated_lp_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (m, n) = (6, 3);
    let basis = Array3::from_shape_fn(
        (m, 2, n),
        |(_, _, k)| if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) },
    );
    let z = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..1.0));
    let exact = common::enumerate_dual_optimum(&basis, &z);
    let cfg = DualConfig {
        epochs: 4000,
        batch_size: m,
        lr: 1e-2,
        lr_floor: 1e-3,
        ..Default::default()
    };
    let fit = dual_minimize(basis.view(), z.view(), None, &cfg).unwrap();
    assert!(fit.objective >= exact - 1e-9);
    assert!(fit.objective - exact < 1e-3, "{} vs {exact}", fit.objective);
}

#[test]
fn dual_with_doob_basis_recovers_snell_value() {
    let toy = common::binomial_toy();
    let cfg = DualConfig {
        epochs: 3000,
        batch_size: 4,
        lr: 1e-2,
        lr_floor: 1e-3,
        smooth_max: Some(0.5),
        ..Default::default()
    };
    let fit = dual_minimize(toy.doob.view(), toy.z.view(), None, &cfg).unwrap();
    assert!((fit.objective - toy.y0).abs() < 1e-3, "{} vs {}", fit.objective, toy.y0);
    let exact = dual_objective(toy.doob.view(), toy.z.view(), &[1.0]).unwrap();
    assert!((exact - toy.y0).abs() < 1e-12);
}
