//! Criterion benchmarks for the hot loops of `roughstop`; see `benches/`.
//!
//! The fixtures here are deterministic so that timings are comparable
//! across runs.

use roughstop::models::{simulate, ModelParams, PathBatch, SimConfig};
use roughstop::signature::{augment_path, AugmentMode, AugmentedPath};

/// Smooth, deterministic `dim`-channel path with `len` samples on `[0, 1]`,
/// time-augmented.
pub fn wiggly_path(len: usize, dim: usize, phase: f64) -> AugmentedPath {
    let times: Vec<f64> = (0..len).map(|i| i as f64 / (len - 1) as f64).collect();
    let values: Vec<f64> = times
        .iter()
        .flat_map(|&t| (0..dim).map(move |c| (3.0 * t * (c + 1) as f64 + phase).sin() * 0.5))
        .collect();
    augment_path(&values, dim, &times, AugmentMode::Time).expect("well-formed fixture")
}

/// Rough Bergomi batch at `H = 0.07` with twelve exercise dates.
pub fn bergomi_batch(paths: usize, fine_steps: usize) -> PathBatch {
    let sim = SimConfig {
        fine_steps,
        exercise_dates: 12,
        paths,
        seed: 11,
        antithetic: false,
    };
    simulate(&ModelParams::rough_bergomi(0.07), &sim).expect("valid fixture")
}
