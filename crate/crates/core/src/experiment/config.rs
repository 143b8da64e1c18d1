//! Experiment configuration: named presets, TOML files layered on top of a
//! preset, and dotted `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernel::KernelLiftSpec;
use crate::models::{ModelParams, SimConfig};
use crate::regress::DualConfig;
use crate::stopping::{
    DeepDual, DeepPrimal, DualBackend, KernelDual, KernelPrimal, LinearDual, LinearPrimal, PrimalBackend,
};

/// Version string embedded in every output row.
pub const VERSION: &str = concat!("roughstop-", env!("CARGO_PKG_VERSION"));

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: &[&str] = &[
    "table1",
    "table2",
    "table3",
    "paper-table1",
    "paper-table2",
    "paper-table3",
    "smoke",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Linear,
    Deep,
    Kernel,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Linear => "linear",
            BackendKind::Deep => "deep",
            BackendKind::Kernel => "kernel",
        }
    }
}

/// Training and test batch sizes, grid and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub fine_steps: usize,
    pub exercise_dates: usize,
    pub train_paths: usize,
    pub test_paths: usize,
    /// Repeat `r` trains on seed `train_seed + r`.
    pub train_seed: u64,
    pub test_seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl Sampling {
    pub fn train(&self, repeat: usize) -> SimConfig {
        SimConfig {
            fine_steps: self.fine_steps,
            exercise_dates: self.exercise_dates,
            paths: self.train_paths,
            seed: self.train_seed + repeat as u64,
            antithetic: self.antithetic,
        }
    }

    pub fn test(&self) -> SimConfig {
        SimConfig {
            fine_steps: self.fine_steps,
            exercise_dates: self.exercise_dates,
            paths: self.test_paths,
            seed: self.test_seed,
            antithetic: self.antithetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearPair {
    pub primal: LinearPrimal,
    pub dual: LinearDual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepPair {
    pub primal: DeepPrimal,
    pub dual: DeepDual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelPair {
    pub primal: KernelPrimal,
    pub dual: KernelDual,
}

/// Grids for the parameter studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Studies {
    pub ridge_lambdas: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub correlations: Vec<f64>,
    pub fine_steps: Vec<usize>,
    pub hursts: Vec<f64>,
    /// Shuffles per feature in the importance study.
    pub importance_repeats: usize,
    /// Seed of the importance permutations.
    pub importance_seed: u64,
}

impl Default for Studies {
    fn default() -> Self {
        Self {
            ridge_lambdas: vec![0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            sample_sizes: vec![1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14],
            correlations: vec![-1.0, -0.9, -0.5, 0.0, 0.5, 1.0],
            fine_steps: vec![60, 120, 240],
            hursts: vec![0.07, 0.3, 0.5],
            importance_repeats: 5,
            importance_seed: 7,
        }
    }
}

/// Everything one experiment needs, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelParams,
    pub strikes: Vec<f64>,
    pub sampling: Sampling,
    pub backends: Vec<BackendKind>,
    pub linear: LinearPair,
    pub deep: DeepPair,
    pub kernel: KernelPair,
    /// Independent trainings per cell.
    pub repeats: usize,
    /// Regress on in-the-money paths only.
    pub itm_only: bool,
    pub studies: Studies,
}

fn desk_sampling() -> Sampling {
    Sampling {
        fine_steps: 120,
        exercise_dates: 12,
        train_paths: 1 << 14,
        test_paths: 1 << 14,
        train_seed: 1,
        test_seed: 1_000_000,
        antithetic: false,
    }
}

fn paper_sampling() -> Sampling {
    Sampling {
        fine_steps: 600,
        exercise_dates: 12,
        train_paths: 1 << 18,
        test_paths: 1 << 18,
        ..desk_sampling()
    }
}

impl ExperimentConfig {
    fn desk(name: &str, model: ModelParams, lambda: f64) -> Self {
        let mut kernel = KernelPair {
            primal: KernelPrimal::default(),
            dual: KernelDual::default(),
        };
        kernel.primal.lambda = lambda;
        Self {
            name: name.to_string(),
            model,
            strikes: vec![70.0, 80.0, 90.0, 100.0, 110.0, 120.0],
            sampling: desk_sampling(),
            backends: vec![BackendKind::Linear, BackendKind::Deep, BackendKind::Kernel],
            linear: LinearPair {
                primal: LinearPrimal::default(),
                dual: LinearDual::default(),
            },
            deep: DeepPair {
                primal: DeepPrimal::default(),
                dual: DeepDual::default(),
            },
            kernel,
            repeats: 1,
            itm_only: false,
            studies: Studies::default(),
        }
    }

    fn paper(mut self) -> Self {
        self.name = format!("paper-{}", self.name);
        self.sampling = paper_sampling();
        self.deep.primal.later_epochs = 1;
        self.deep.dual.hidden_layers = 6;
        self.kernel.primal.lift = KernelLiftSpec::standard(120);
        self.kernel.dual.lift = KernelLiftSpec::standard(120);
        self.repeats = 20;
        self
    }

    /// A named configuration.
    pub fn preset(name: &str) -> Result<Self> {
        let table1 = || Self::desk("table1", ModelParams::rough_bergomi(0.8), 1e-3);
        let table2 = || Self::desk("table2", ModelParams::rough_bergomi(0.07), 1e-3);
        let table3 = || Self::desk("table3", ModelParams::rough_heston(0.1), 1e-8);
        Ok(match name {
            "table1" => table1(),
            "table2" => table2(),
            "table3" => table3(),
            "paper-table1" => table1().paper(),
            "paper-table2" => table2().paper(),
            "paper-table3" => table3().paper(),
            "smoke" => {
                let mut c = Self::desk("smoke", ModelParams::rough_bergomi(0.3), 1e-3);
                c.strikes = vec![100.0];
                c.sampling = Sampling {
                    fine_steps: 24,
                    exercise_dates: 6,
                    train_paths: 512,
                    test_paths: 512,
                    ..desk_sampling()
                };
                c.backends = vec![BackendKind::Linear];
                c.linear.dual.optimizer = DualConfig {
                    epochs: 40,
                    batch_size: 256,
                    ..DualConfig::default()
                };
                c.deep.primal.first_epochs = 3;
                c.deep.dual.epochs = 3;
                for lift in [&mut c.kernel.primal.lift, &mut c.kernel.dual.lift] {
                    *lift = KernelLiftSpec::standard(24);
                }
                c.kernel.primal.landmarks = 8;
                c.kernel.dual.landmarks = 8;
                c.kernel.dual.optimizer = c.linear.dual.optimizer.clone();
                c.studies = Studies {
                    ridge_lambdas: vec![0.0, 1e-3, 1.0],
                    sample_sizes: vec![256, 512],
                    correlations: vec![-1.0, 0.0, 1.0],
                    fine_steps: vec![12, 24],
                    hursts: vec![0.1, 0.5],
                    importance_repeats: 2,
                    importance_seed: 7,
                };
                c
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    /// Resolve a preset, an optional TOML file and dotted overrides, in that
    /// order. A file may name its base with a top-level `preset = "..."`.
    pub fn resolve(preset: Option<&str>, file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let file_value = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                Some(
                    text.parse::<toml::Table>()
                        .map_err(|e| Error::Config(format!("invalid TOML in {}: {e}", p.display())))?,
                )
            }
            None => None,
        };
        let file_preset = file_value
            .as_ref()
            .and_then(|t| t.get("preset"))
            .map(|v| {
                v.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Config("`preset` must be a string".into()))
            })
            .transpose()?;
        let base_name = preset
            .map(str::to_owned)
            .or(file_preset)
            .unwrap_or_else(|| "table2".to_string());
        let mut value = toml::Value::try_from(Self::preset(&base_name)?)
            .map_err(|e| Error::Config(format!("cannot encode preset: {e}")))?;
        if let Some(mut t) = file_value {
            t.remove("preset");
            merge(&mut value, toml::Value::Table(t));
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("invalid configuration: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sampling.train(0).validate()?;
        self.sampling.test().validate()?;
        if self.strikes.is_empty() || self.strikes.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::Config(
                "strikes must be a non-empty list of positive numbers".into(),
            ));
        }
        if self.backends.is_empty() {
            return Err(Error::Config("select at least one backend".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        let seeds = self.sampling.train_seed..self.sampling.train_seed + self.repeats as u64;
        if seeds.contains(&self.sampling.test_seed) {
            return Err(Error::Config(format!(
                "test seed {} collides with training seeds {seeds:?}",
                self.sampling.test_seed
            )));
        }
        if self.backends.contains(&BackendKind::Kernel) {
            for lift in [&self.kernel.primal.lift, &self.kernel.dual.lift] {
                lift.stride_for(self.sampling.fine_steps, self.sampling.exercise_dates)
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Short hash of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_value(self).expect("config encodes").to_string();
        hex::encode(&Sha256::digest(canon.as_bytes())[..6])
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config encodes")
    }

    pub fn primal_backend(&self, kind: BackendKind) -> PrimalBackend {
        match kind {
            BackendKind::Linear => PrimalBackend::Linear(self.linear.primal.clone()),
            BackendKind::Deep => PrimalBackend::Deep(self.deep.primal.clone()),
            BackendKind::Kernel => PrimalBackend::Kernel(self.kernel.primal.clone()),
        }
    }

    pub fn dual_backend(&self, kind: BackendKind) -> DualBackend {
        match kind {
            BackendKind::Linear => DualBackend::Linear(self.linear.dual.clone()),
            BackendKind::Deep => DualBackend::Deep(self.deep.dual.clone()),
            BackendKind::Kernel => DualBackend::Kernel(self.kernel.dual.clone()),
        }
    }
}

/// Recursive table merge; scalars and arrays in `top` replace those in `base`.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Apply `a.b.c=value`; the value is parsed as TOML, falling back to a string.
pub fn apply_override(value: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let parsed = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut patch = parsed;
    for part in key.rsplit('.') {
        let mut t = toml::Table::new();
        t.insert(part.to_string(), patch);
        patch = toml::Value::Table(t);
    }
    merge(value, patch);
    Ok(())
}
