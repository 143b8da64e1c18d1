//! Shared oracles for integration tests.
#![allow(dead_code)]

use ndarray::{Array2, Array3};

/// Two-period binomial put with every scenario enumerated once.
pub struct BinomialToy {
    /// Prices `S_{i,n}` for the four scenarios.
    pub s: Array2<f64>,
    /// Discounted payoffs.
    pub z: Array2<f64>,
    /// Doob martingale of the Snell envelope as a single basis element.
    pub doob: Array3<f64>,
    /// Snell envelope `Y_{i,n}`.
    pub snell: Array2<f64>,
    pub y0: f64,
}

/// `S_0 = 100`, up `1.25`, down `0.8`, one-period growth `1.025`, so the
/// risk-neutral up-probability is exactly 1/2 and plain averages over the
/// four scenarios are exact expectations.
pub fn binomial_toy() -> BinomialToy {
    let (s0, up, down, strike, growth): (f64, f64, f64, f64, f64) = (100.0, 1.25, 0.8, 100.0, 1.025);
    let moves = [(true, true), (true, false), (false, true), (false, false)];
    let mut s = Array2::zeros((4, 3));
    for (i, &(a, b)) in moves.iter().enumerate() {
        let s1 = s0 * if a { up } else { down };
        s[(i, 0)] = s0;
        s[(i, 1)] = s1;
        s[(i, 2)] = s1 * if b { up } else { down };
    }
    let z = Array2::from_shape_fn((4, 3), |(i, n)| (strike - s[(i, n)]).max(0.0) / growth.powi(n as i32));
    let mut snell = Array2::zeros((4, 3));
    for i in 0..4 {
        snell[(i, 2)] = z[(i, 2)];
    }
    let groups = [[0usize, 1], [2, 3]];
    let mut cont1 = [0.0; 4];
    for g in groups {
        let c = 0.5 * (snell[(g[0], 2)] + snell[(g[1], 2)]);
        for &i in &g {
            snell[(i, 1)] = z[(i, 1)].max(c);
            cont1[i] = c;
        }
    }
    let c0 = 0.25 * (0..4).map(|i| snell[(i, 1)]).sum::<f64>();
    let y0 = z[(0, 0)].max(c0);
    for i in 0..4 {
        snell[(i, 0)] = y0;
    }
    let mut doob = Array3::zeros((4, 1, 3));
    for i in 0..4 {
        let m1 = snell[(i, 1)] - c0;
        doob[(i, 0, 1)] = m1;
        doob[(i, 0, 2)] = m1 + snell[(i, 2)] - cont1[i];
    }
    BinomialToy { s, z, doob, snell, y0 }
}

/// Exact minimum of the convex piecewise-linear dual objective for two basis
/// elements, by enumerating all vertices of the breakpoint arrangement.
pub fn enumerate_dual_optimum(basis: &Array3<f64>, z: &Array2<f64>) -> f64 {
    let (m, b, n) = basis.dim();
    assert_eq!(b, 2);
    let objective = |beta: [f64; 2]| -> f64 {
        (0..m)
            .map(|i| {
                (0..n)
                    .map(|k| z[(i, k)] - beta[0] * basis[(i, 0, k)] - beta[1] * basis[(i, 1, k)])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum::<f64>()
            / m as f64
    };
    // Lines c·β = r where two affine pieces of one path are equal.
    let mut lines = Vec::new();
    for i in 0..m {
        for k in 0..n {
            for l in k + 1..n {
                let c = [basis[(i, 0, k)] - basis[(i, 0, l)], basis[(i, 1, k)] - basis[(i, 1, l)]];
                let r = z[(i, k)] - z[(i, l)];
                if c[0].abs() + c[1].abs() > 1e-14 {
                    lines.push((c, r));
                }
            }
        }
    }
    let mut best = objective([0.0, 0.0]);
    for a in 0..lines.len() {
        for bb in a + 1..lines.len() {
            let ((c1, r1), (c2, r2)) = (lines[a], lines[bb]);
            let det = c1[0] * c2[1] - c1[1] * c2[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let beta = [(r1 * c2[1] - r2 * c1[1]) / det, (c1[0] * r2 - c2[0] * r1) / det];
            best = best.min(objective(beta));
        }
    }
    best
}
