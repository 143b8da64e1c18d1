use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volatility specification driving the log-price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolModel {
    /// Variance `V_t = ξ0 exp(η √(2H) Y_t − η² t^{2H} / 2)` with `Y` the
    /// Riemann–Liouville process `∫_0^t (t−s)^{H−1/2} dW_s`; vol `√V`.
    RoughBergomi {
        hurst: f64,
        eta: f64,
        xi0: f64,
    },
    /// Volterra CIR variance with kernel `(t−s)^{H−1/2}`; vol `√V`.
    RoughHeston {
        hurst: f64,
        mean_reversion: f64,
        theta: f64,
        nu: f64,
        v0: f64,
    },
    BlackScholes {
        sigma: f64,
    },
}

/// Full model specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: VolModel,
    pub rho: f64,
    pub rate: f64,
    pub s0: f64,
    pub maturity: f64,
}

impl ModelParams {
    pub fn rough_bergomi(hurst: f64) -> Self {
        Self {
            model: VolModel::RoughBergomi {
                hurst,
                eta: 1.9,
                xi0: 0.09,
            },
            rho: -0.9,
            rate: 0.05,
            s0: 100.0,
            maturity: 1.0,
        }
    }

    pub fn rough_heston(hurst: f64) -> Self {
        Self {
            model: VolModel::RoughHeston {
                hurst,
                mean_reversion: 0.3,
                theta: 0.02,
                nu: 0.3,
                v0: 0.02,
            },
            rho: -0.7,
            rate: 0.06,
            s0: 100.0,
            maturity: 1.0,
        }
    }

    pub fn black_scholes(sigma: f64, rate: f64) -> Self {
        Self {
            model: VolModel::BlackScholes { sigma },
            rho: 0.0,
            rate,
            s0: 100.0,
            maturity: 1.0,
        }
    }

    pub fn hurst(&self) -> Option<f64> {
        match self.model {
            VolModel::RoughBergomi { hurst, .. } | VolModel::RoughHeston { hurst, .. } => Some(hurst),
            VolModel::BlackScholes { .. } => None,
        }
    }

    pub fn with_hurst(mut self, h: f64) -> Self {
        match &mut self.model {
            VolModel::RoughBergomi { hurst, .. } | VolModel::RoughHeston { hurst, .. } => *hurst = h,
            VolModel::BlackScholes { .. } => {}
        }
        self
    }

    pub fn name(&self) -> &'static str {
        match self.model {
            VolModel::RoughBergomi { .. } => "rough_bergomi",
            VolModel::RoughHeston { .. } => "rough_heston",
            VolModel::BlackScholes { .. } => "black_scholes",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.rho.abs() <= 1.0) {
            return bad(format!("correlation {} outside [-1, 1]", self.rho));
        }
        if !(self.rate >= 0.0) {
            return bad(format!("rate {} must be non-negative", self.rate));
        }
        if !(self.s0 > 0.0) || !(self.maturity > 0.0) {
            return bad("s0 and maturity must be positive".into());
        }
        if let Some(h) = self.hurst() {
            if !(h > 0.0 && h < 1.0) {
                return bad(format!("Hurst parameter {h} outside (0, 1)"));
            }
        }
        match self.model {
            VolModel::RoughBergomi { eta, xi0, .. } => {
                if !(xi0 > 0.0) || !eta.is_finite() {
                    return bad("rough Bergomi needs xi0 > 0 and finite eta".into());
                }
            }
            VolModel::RoughHeston {
                mean_reversion,
                theta,
                nu,
                v0,
                ..
            } => {
                if !(v0 > 0.0 && theta > 0.0) || !(nu >= 0.0) || !(mean_reversion >= 0.0) {
                    return bad("rough Heston needs v0, theta > 0 and nu, lambda >= 0".into());
                }
            }
            VolModel::BlackScholes { sigma } => {
                if !(sigma >= 0.0) {
                    return bad("Black-Scholes sigma must be non-negative".into());
                }
            }
        }
        Ok(())
    }
}

/// Discretisation and sampling controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of fine steps `N_f`.
    pub fine_steps: usize,
    /// Number of exercise dates after `t_0`.
    pub exercise_dates: usize,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.exercise_dates == 0 || self.fine_steps == 0 {
            return Err(Error::Config("need at least one step and one exercise date".into()));
        }
        if self.fine_steps % self.exercise_dates != 0 {
            return Err(Error::Config(format!(
                "fine steps {} not a multiple of exercise dates {}",
                self.fine_steps, self.exercise_dates
            )));
        }
        if self.paths == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(Error::Config("antithetic sampling needs an even path count".into()));
        }
        Ok(())
    }

    pub fn exercise_indices(&self) -> Vec<usize> {
        let stride = self.fine_steps / self.exercise_dates;
        (0..=self.exercise_dates).map(|n| n * stride).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelParams::rough_bergomi(0.07).validate().unwrap();
        ModelParams::rough_heston(0.1).validate().unwrap();
        assert!(ModelParams::rough_bergomi(1.2).validate().is_err());
        let mut p = ModelParams::rough_heston(0.1);
        p.rho = -1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn exercise_grid_aligns() {
        let sim = SimConfig {
            fine_steps: 120,
            exercise_dates: 12,
            paths: 4,
            seed: 1,
            antithetic: false,
        };
        sim.validate().unwrap();
        let idx = sim.exercise_indices();
        assert_eq!(idx.len(), 13);
        assert_eq!(idx[12], 120);
        assert!(SimConfig { fine_steps: 100, ..sim }.validate().is_err());
    }
}
