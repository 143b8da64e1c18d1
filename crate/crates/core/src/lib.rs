//! Primal and dual Monte Carlo bounds for Bermudan options under rough
//! volatility, with linear-signature, deep-signature and signature-kernel
//! regression backends.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod models;
pub mod regress;
pub mod signature;
pub mod stats;
pub mod stopping;

pub use error::{Error, Result};
