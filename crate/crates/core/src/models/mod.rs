//! Rough-volatility scenario generation and put cash flows.

mod batch;
pub mod bergomi;
pub mod cache;
mod params;
mod payoff;
mod simulate;

pub use batch::{path_rng, Drivers, Field, PathBatch, SimDiagnostics, StoppedPath};
pub use cache::{config_key, CacheMeta, CacheStatus, PathCache};
pub use params::{ModelParams, SimConfig, VolModel};
pub use payoff::{black_scholes_put, cashflows, put_payoff, CashflowMatrix};
pub use simulate::{
    simulate, simulate_black_scholes, simulate_rough_bergomi, simulate_rough_heston,
    simulate_rough_heston_with_variance, volterra_weights,
};
