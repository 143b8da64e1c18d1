use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::{ModelParams, SimConfig};

/// Per-path random stream: independent of the batch size and of the order in
/// which paths are generated.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index and sign for path `i`; antithetic partners share a stream.
pub(crate) fn stream_of(i: usize, antithetic: bool) -> (u64, f64) {
    if antithetic {
        ((i / 2) as u64, if i % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        (i as u64, 1.0)
    }
}

/// Simulation side information surfaced to callers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimDiagnostics {
    /// Diagonal jitter (relative to mean variance) used in a covariance factorisation.
    pub jitter: Option<f64>,
    /// Fraction of Volterra steps whose variance state went negative.
    pub negative_variance_fraction: Option<f64>,
    pub warnings: Vec<String>,
}

/// `M` simulated scenarios on a uniform fine grid.
///
/// All arrays are `M × (N_f + 1)`; `w` and `b` are the two independent
/// Brownian motions (vol-driving and orthogonal).
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub params: ModelParams,
    pub sim: SimConfig,
    pub times: Vec<f64>,
    pub exercise_idx: Vec<usize>,
    pub s: Array2<f64>,
    pub x: Array2<f64>,
    pub v: Array2<f64>,
    pub w: Array2<f64>,
    pub b: Array2<f64>,
    pub diagnostics: SimDiagnostics,
}

/// Data fields a stopped path exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Price,
    LogPrice,
    Vol,
    VolBrownian,
    OrthBrownian,
}

impl PathBatch {
    pub fn num_paths(&self) -> usize {
        self.s.nrows()
    }

    pub fn fine_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.params.maturity / self.fine_steps() as f64
    }

    pub fn exercise_times(&self) -> Vec<f64> {
        self.exercise_idx.iter().map(|&k| self.times[k]).collect()
    }

    pub fn num_dates(&self) -> usize {
        self.exercise_idx.len()
    }

    pub fn field(&self, f: Field) -> &Array2<f64> {
        match f {
            Field::Price => &self.s,
            Field::LogPrice => &self.x,
            Field::Vol => &self.v,
            Field::VolBrownian => &self.w,
            Field::OrthBrownian => &self.b,
        }
    }

    /// View of path `i` that cannot see past fine index `cutoff`.
    pub fn stopped(&self, i: usize, cutoff: usize) -> Result<StoppedPath<'_>> {
        if i >= self.num_paths() {
            return Err(Error::Index(format!("path {i} outside batch of {}", self.num_paths())));
        }
        if cutoff > self.fine_steps() {
            return Err(Error::Index(format!("cutoff {cutoff} beyond grid")));
        }
        Ok(StoppedPath {
            batch: self,
            path: i,
            cutoff,
        })
    }

    /// Integrated variance `∫_0^t v_u² du` (left sums) for path `i`, up to `cutoff`.
    pub(crate) fn quadratic_variation(&self, i: usize, cutoff: usize) -> Vec<f64> {
        let dt = self.dt();
        let v = self.v.row(i);
        let mut out = Vec::with_capacity(cutoff + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 0..cutoff {
            acc += v[k] * v[k] * dt;
            out.push(acc);
        }
        out
    }
}

/// Adapted view of one sampled path: every accessor stops at `cutoff`.
#[derive(Debug, Clone, Copy)]
pub struct StoppedPath<'a> {
    batch: &'a PathBatch,
    path: usize,
    cutoff: usize,
}

impl<'a> StoppedPath<'a> {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn path_index(&self) -> usize {
        self.path
    }

    pub fn times(&self) -> &'a [f64] {
        &self.batch.times[..=self.cutoff]
    }

    /// History of `field` on `0..=cutoff`.
    pub fn history(&self, field: Field) -> &'a [f64] {
        let arr: &'a Array2<f64> = self.batch.field(field);
        let cols = arr.ncols();
        let flat = arr.as_slice().expect("batch arrays are row-major");
        &flat[self.path * cols..self.path * cols + self.cutoff + 1]
    }

    /// Value at fine index `k`; indices past the cutoff are refused.
    pub fn at(&self, field: Field, k: usize) -> Result<f64> {
        if k > self.cutoff {
            return Err(Error::Adaptedness {
                requested: k,
                cutoff: self.cutoff,
            });
        }
        Ok(self.history(field)[k])
    }

    /// Grid time at fine index `k`; indices past the cutoff are refused.
    pub fn at_time(&self, k: usize) -> Result<f64> {
        if k > self.cutoff {
            return Err(Error::Adaptedness {
                requested: k,
                cutoff: self.cutoff,
            });
        }
        Ok(self.batch.times[k])
    }

    /// Current value at the cutoff.
    pub fn now(&self, field: Field) -> f64 {
        self.history(field)[self.cutoff]
    }

    /// Integrated variance on `0..=cutoff`.
    pub fn quadratic_variation(&self) -> Vec<f64> {
        self.batch.quadratic_variation(self.path, self.cutoff)
    }

    pub fn params(&self) -> &'a ModelParams {
        &self.batch.params
    }
}

/// Brownian drivers the dual martingales integrate against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Drivers {
    /// Only the volatility-driving motion `W`.
    Vol,
    /// Both `W` and the orthogonal motion `B` (the full filtration).
    #[default]
    Both,
}

impl Drivers {
    pub fn fields(&self) -> &'static [Field] {
        match self {
            Drivers::Vol => &[Field::VolBrownian],
            Drivers::Both => &[Field::VolBrownian, Field::OrthBrownian],
        }
    }
}
