//! Regression backends: least squares, kernel ridge, feed-forward networks,
//! and the dual minimiser shared by all of them.

mod blob;
mod dual;
mod features;
mod linear;
mod mlp;
mod ridge;

pub use blob::{decode_blob, encode_blob, BLOB_VERSION};
pub use dual::{combine_basis, dual_minimize, dual_objective, dual_pathwise, DualConfig, DualFit, Penalty};
pub use features::{FeatureMatrix, Standardizer, TargetScale, INTERCEPT};
pub use linear::{linear_lsq, predict_linear, SVD_CUTOFF};
pub use mlp::{mlp_fit, mse, Activation, Adam, Gradients, Mlp, Tape, TrainConfig, LEAKY_SLOPE};
pub use ridge::{conjugate_gradient, kernel_ridge, RidgeSolution};
