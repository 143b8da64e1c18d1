use serde::{Deserialize, Serialize};

/// Sample mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    /// Mean and standard error of i.i.d. samples.
    ///
    /// With `paired` set, consecutive samples `(2k, 2k+1)` are antithetic
    /// partners and the error is computed from the pair averages.
    pub fn from_samples(samples: &[f64], paired: bool) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if paired && n >= 4 && n % 2 == 0 {
            let pairs: Vec<f64> = samples.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
            return Self {
                mean,
                se: std_error(&pairs, mean),
            };
        }
        Self {
            mean,
            se: std_error(samples, mean),
        }
    }
}

fn std_error(xs: &[f64], mean: f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Mean and standard error across independent repetitions.
pub fn across_repeats(values: &[f64]) -> McEstimate {
    McEstimate::from_samples(values, false)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], false);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (1.666_666_666_666_666_7f64 / 4.0).sqrt()).abs() < 1e-15);
        let p = McEstimate::from_samples(&[1.0, -1.0, 2.0, -2.0], true);
        assert_eq!(p.mean, 0.0);
        assert_eq!(p.se, 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }
}
