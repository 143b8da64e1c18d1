//! Primal (Longstaff–Schwartz) and dual (martingale) stopping algorithms,
//! bound estimation, duality gaps and feature importance.

mod dual;
mod features;
mod importance;
mod primal;
mod report;

pub use dual::{
    fit_dual, pathwise_dual, upper_bound, DeepDual, DualBackend, DualKind, DualModel, DualTrained, KernelDual,
    LinearDual, UpperBound,
};
pub use features::{
    basis_martingales, driver_increments, exercise_features, features_at, integrand_column, laguerre, step_features,
    streamed_basis, FeatureSpec, SigChannels,
};
pub use importance::{dual_importance, primal_importance, primal_importance_on, FeatureScore};
pub use primal::{
    backward_induction, exercise, fit_primal, fit_primal_design, forward_exercise, kernel_ridge_sweep, lower_bound,
    stopped_cashflows, stopping_value, ContinuationModel, DeepPrimal, KernelBank, KernelPrimal, LinearPrimal,
    LowerBound, PrimalBackend, PrimalDesign, PrimalFit, PrimalOptions, RidgePoint, StoppingPolicy,
};
pub use report::{duality_report, relative_gap, PriceReport, Timings, SE_MULTIPLIER};
