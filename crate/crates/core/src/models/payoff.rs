use ndarray::Array2;

use crate::stats::McEstimate;

use super::batch::PathBatch;

/// Discounted put cash flows `Z[i][n] = e^{−r t_n}(K − S_{t_n})⁺` on the exercise grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CashflowMatrix {
    pub strike: f64,
    pub times: Vec<f64>,
    pub z: Array2<f64>,
}

impl CashflowMatrix {
    pub fn num_paths(&self) -> usize {
        self.z.nrows()
    }

    pub fn num_dates(&self) -> usize {
        self.z.ncols()
    }

    /// Build directly from a matrix of discounted payoffs (used by toy problems).
    pub fn from_matrix(strike: f64, times: Vec<f64>, z: Array2<f64>) -> Self {
        Self { strike, times, z }
    }

    /// European estimate from the payoffs at maturity.
    pub fn european(&self, paired: bool) -> McEstimate {
        let last = self.num_dates() - 1;
        let col: Vec<f64> = self.z.column(last).to_vec();
        McEstimate::from_samples(&col, paired)
    }

    /// Pathwise maximum over dates, the no-martingale dual bound.
    pub fn pathwise_max(&self, paired: bool) -> McEstimate {
        let maxes: Vec<f64> = self
            .z
            .rows()
            .into_iter()
            .map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        McEstimate::from_samples(&maxes, paired)
    }
}

pub fn put_payoff(strike: f64, rate: f64, t: f64, s: f64) -> f64 {
    (-rate * t).exp() * (strike - s).max(0.0)
}

pub fn cashflows(batch: &PathBatch, strike: f64) -> CashflowMatrix {
    let times = batch.exercise_times();
    let rate = batch.params.rate;
    let m = batch.num_paths();
    let z = Array2::from_shape_fn((m, times.len()), |(i, n)| {
        put_payoff(strike, rate, times[n], batch.s[(i, batch.exercise_idx[n])])
    });
    CashflowMatrix { strike, times, z }
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Closed-form European put. Degenerate inputs fall back to the discounted
/// intrinsic value of the forward.
pub fn black_scholes_put(s0: f64, strike: f64, rate: f64, sigma: f64, maturity: f64) -> f64 {
    let disc = (-rate * maturity).exp();
    if strike <= 0.0 {
        return 0.0;
    }
    let sd = sigma * maturity.sqrt();
    if !(sd > 0.0) {
        return (strike * disc - s0).max(0.0);
    }
    let d1 = ((s0 / strike).ln() + (rate + 0.5 * sigma * sigma) * maturity) / sd;
    let d2 = d1 - sd;
    strike * disc * norm_cdf(-d2) - s0 * norm_cdf(-d1)
}
