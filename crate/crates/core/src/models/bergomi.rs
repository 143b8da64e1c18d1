//! Rough Bergomi paths from an exact joint Gaussian factorisation of the
//! Riemann–Liouville process `Y` and its driving Brownian motion `W`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::batch::{path_rng, stream_of};

/// `2F1(1, -a; a+2; x)` by its power series, `0 <= x < 1`.
fn hyp2f1_rl(a: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    while k < 1.0e6 {
        term *= (k - a) / (a + 2.0 + k) * x;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `Cov(Y_s, Y_u) = ∫_0^min (s−r)^a (u−r)^a dr` with `a = H − 1/2`.
pub fn rl_covariance(hurst: f64, s: f64, u: f64) -> f64 {
    let a = hurst - 0.5;
    let (lo, hi) = if s <= u { (s, u) } else { (u, s) };
    if lo <= 0.0 {
        return 0.0;
    }
    if lo == hi {
        return lo.powf(2.0 * hurst) / (2.0 * hurst);
    }
    lo.powf(a + 1.0) * hi.powf(a) / (a + 1.0) * hyp2f1_rl(a, lo / hi)
}

/// `Cov(Y_t, W_s) = ∫_0^{min(t,s)} (t−r)^a dr`.
pub fn rl_brownian_covariance(hurst: f64, t: f64, s: f64) -> f64 {
    let a = hurst - 0.5;
    let m = t.min(s);
    (t.powf(a + 1.0) - (t - m).max(0.0).powf(a + 1.0)) / (a + 1.0)
}

/// Lower Cholesky factor of the `2n × 2n` covariance of
/// `(Y_{u_1..u_n}, W_{u_1..u_n})`.
#[derive(Debug, Clone)]
pub struct VolterraFactor {
    n: usize,
    lower: Vec<f64>,
    /// Diagonal jitter actually used, relative to `trace / dim`.
    pub jitter: Option<f64>,
}

impl VolterraFactor {
    pub fn new(hurst: f64, maturity: f64, n: usize) -> Result<Self> {
        let dt = maturity / n as f64;
        let t: Vec<f64> = (1..=n).map(|i| i as f64 * dt).collect();
        let dim = 2 * n;
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..=i {
                let c = rl_covariance(hurst, t[i], t[j]);
                cov[(i, j)] = c;
                cov[(j, i)] = c;
                let w = t[i].min(t[j]);
                cov[(n + i, n + j)] = w;
                cov[(n + j, n + i)] = w;
            }
            for j in 0..n {
                let c = rl_brownian_covariance(hurst, t[i], t[j]);
                cov[(i, n + j)] = c;
                cov[(n + j, i)] = c;
            }
        }
        let scale = cov.trace() / dim as f64;
        let mut attempt = 0;
        let mut jitter = None;
        loop {
            let mut m = cov.clone();
            if let Some(j) = jitter {
                for k in 0..dim {
                    m[(k, k)] += j * scale;
                }
            }
            if let Some(ch) = m.cholesky() {
                let l = ch.l();
                let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
                for i in 0..dim {
                    for j in 0..=i {
                        lower.push(l[(i, j)]);
                    }
                }
                return Ok(Self { n, lower, jitter });
            }
            let next = match jitter {
                None => 1e-12,
                Some(j) => j * 10.0,
            };
            attempt += 1;
            if next > 1e-8 * (1.0 + 1e-9) || attempt > 6 {
                return Err(Error::Numerical(format!(
                    "Volterra covariance not positive definite after jitter {:e}",
                    jitter.unwrap_or(0.0)
                )));
            }
            jitter = Some(next);
        }
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// Map `2n` standard normals to `(Y_1..Y_n, W_1..W_n)`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let dim = 2 * self.n;
        let mut pos = 0;
        for (i, o) in out.iter_mut().enumerate().take(dim) {
            let row = &self.lower[pos..pos + i + 1];
            *o = row.iter().zip(z).map(|(l, x)| l * x).sum();
            pos += i + 1;
        }
    }
}

/// One rough Bergomi sample: `Y` and `W` on `u_0..u_n` plus `B` increments.
pub(crate) struct BergomiDraw {
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub db: Vec<f64>,
}

pub(crate) fn draw(factor: &VolterraFactor, seed: u64, i: usize, antithetic: bool, dt: f64) -> BergomiDraw {
    let n = factor.steps();
    let (stream, sign) = stream_of(i, antithetic);
    let mut rng = path_rng(seed, stream);
    let z: Vec<f64> = (0..2 * n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            sign * g
        })
        .collect();
    let db: Vec<f64> = (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            sign * dt.sqrt() * g
        })
        .collect();
    let mut g = vec![0.0; 2 * n];
    factor.apply(&z, &mut g);
    let mut y = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    y.push(0.0);
    w.push(0.0);
    y.extend_from_slice(&g[..n]);
    w.extend_from_slice(&g[n..]);
    BergomiDraw { y, w, db }
}
