use serde::{Deserialize, Serialize};

use crate::stats::McEstimate;

/// Wall-clock seconds per stage, mirroring the training-cost categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Signatures, Gram rows and basis martingales.
    pub offline_seconds: f64,
    pub primal_train_seconds: f64,
    pub dual_train_seconds: f64,
    pub evaluation_seconds: f64,
}

/// Bounds for one contract configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    /// In-sample Longstaff–Schwartz value on the training batch.
    pub point_estimate: f64,
    pub lower_bound: f64,
    pub lower_se: f64,
    pub upper_bound: f64,
    pub upper_se: f64,
    /// `(upper − lower) / upper`.
    pub relative_gap: f64,
    /// Set when `lower > upper + 3 (lower_se + upper_se)`.
    pub sandwich_violation: bool,
    /// European price `E[e^{-rT}(K − S_T)^+]` on the test batch.
    pub european: Option<McEstimate>,
    pub train_seed: Option<u64>,
    pub test_seed: Option<u64>,
    /// Resolved configuration echoed verbatim.
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default)]
    pub timings: Timings,
}

/// Multiplier on standard errors used for every tolerance and interval label.
pub const SE_MULTIPLIER: f64 = 3.0;

pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    if lower == upper {
        return 0.0;
    }
    (upper - lower) / upper
}

/// Combine a point estimate and the two bounds.
pub fn duality_report(point_estimate: f64, lower: f64, lower_se: f64, upper: f64, upper_se: f64) -> PriceReport {
    PriceReport {
        point_estimate,
        lower_bound: lower,
        lower_se,
        upper_bound: upper,
        upper_se,
        relative_gap: relative_gap(lower, upper),
        sandwich_violation: lower > upper + SE_MULTIPLIER * (lower_se + upper_se),
        european: None,
        train_seed: None,
        test_seed: None,
        config: serde_json::Value::Null,
        timings: Timings::default(),
    }
}

impl PriceReport {
    /// `[lower − 3 se, upper + 3 se]`.
    pub fn interval(&self) -> (f64, f64) {
        (
            self.lower_bound - SE_MULTIPLIER * self.lower_se,
            self.upper_bound + SE_MULTIPLIER * self.upper_se,
        )
    }
}
