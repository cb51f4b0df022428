//! Experiment configuration: a single JSON document, unknown keys rejected.

use std::path::Path;

use influence_core::channels::{NoiseModel, ProcessSpec};
use influence_core::inference::DEFAULT_DELTA;
use influence_core::process::DEFAULT_DENSE_CAP;
use influence_core::sampler::{GateSet, DEFAULT_MAX_DISTINCT};
use influence_core::tomography::DEFAULT_TOMOGRAPHY_CAP;
use influence_core::QubitSubset;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SHOTS: u64 = 260_000;
pub const DEFAULT_SHOTS_PER_SETTING: u64 = 1000;

/// Config file as written by the user. Missing `noise` means noiseless.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Total influence-sampling budget `M`.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub gates: Option<GateSet>,
    #[serde(default)]
    pub marginals_only: bool,
    #[serde(default)]
    pub shots_per_setting: Option<u64>,
    /// Classical flip probability on tomography measurement outcomes.
    #[serde(default)]
    pub tomography_flip: Option<f64>,
    /// Subsets (1-based qubit lists) reported by `exact` and cross-checked by `sample`.
    #[serde(default)]
    pub subsets: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub dense_cap: Option<usize>,
    #[serde(default)]
    pub tomography_cap: Option<usize>,
    #[serde(default)]
    pub max_distinct: Option<usize>,
    /// Add z-scores of sampled estimates against exact expectations.
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Theta,
    Lambda,
    Phi,
}

/// Parameter grid applied to one layer of the process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub layer: usize,
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    /// Number of grid points, endpoints included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Also sample each point (needs a seed); point `i` uses seed `seed + i`.
    #[serde(default)]
    pub sampled: bool,
    /// Subset to report; defaults to the swept layer's qubits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let grid = match (&self.values, self.start, self.stop, self.steps) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(k)) if k >= 2 => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
            (None, Some(a), Some(_), Some(1)) => vec![a],
            _ => {
                return Err(CliError::config(
                    "sweep needs either `values` or all of `start`, `stop`, `steps` (>= 1)",
                ))
            }
        };
        if grid.is_empty() {
            return Err(CliError::config("sweep grid is empty"));
        }
        Ok(grid)
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub gates: Option<GateSet>,
    pub marginals_only: bool,
}

/// Configuration with every default resolved; echoed in result envelopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub process: ProcessSpec,
    pub noise: NoiseModel,
    pub seed: Option<u64>,
    pub workers: usize,
    pub shots: u64,
    pub delta: f64,
    pub k: Option<usize>,
    pub gates: GateSet,
    pub marginals_only: bool,
    pub shots_per_setting: u64,
    pub tomography_flip: f64,
    pub subsets: Option<Vec<Vec<usize>>>,
    pub dense_cap: usize,
    pub tomography_cap: usize,
    pub max_distinct: usize,
    pub cross_check: bool,
    pub sweep: Option<SweepSpec>,
}

impl ResolvedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        let resolved = Self {
            process: raw.process,
            noise: raw.noise.unwrap_or_else(NoiseModel::noiseless),
            seed: overrides.seed.or(raw.seed),
            workers: overrides.workers.or(raw.workers).unwrap_or(0),
            shots: raw.shots.unwrap_or(DEFAULT_SHOTS),
            delta: raw.delta.unwrap_or(DEFAULT_DELTA),
            k: raw.k,
            gates: overrides.gates.or(raw.gates).unwrap_or(GateSet::Two),
            marginals_only: overrides.marginals_only || raw.marginals_only,
            shots_per_setting: raw.shots_per_setting.unwrap_or(DEFAULT_SHOTS_PER_SETTING),
            tomography_flip: raw.tomography_flip.unwrap_or(0.0),
            subsets: raw.subsets,
            dense_cap: raw.dense_cap.unwrap_or(DEFAULT_DENSE_CAP),
            tomography_cap: raw.tomography_cap.unwrap_or(DEFAULT_TOMOGRAPHY_CAP),
            max_distinct: raw.max_distinct.unwrap_or(DEFAULT_MAX_DISTINCT),
            cross_check: raw.cross_check,
            sweep: raw.sweep,
        };
        resolved.validate()?;
        Ok(resolved)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.process.validate()?;
        self.noise.validate(self.process.n)?;
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CliError::config(format!("delta = {} must be positive", self.delta)));
        }
        if self.shots == 0 || self.shots_per_setting == 0 {
            return Err(CliError::config("shot budgets must be at least 1"));
        }
        if let Some(subsets) = &self.subsets {
            for s in subsets {
                self.subset(s)?;
            }
        }
        Ok(())
    }

    pub fn subset(&self, qubits: &[usize]) -> Result<QubitSubset, CliError> {
        Ok(QubitSubset::from_qubits(self.process.n, qubits)?)
    }

    /// Seed for sampling commands, which cannot run without one.
    pub fn require_seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::config(format!("`{command}` samples and needs a seed (config `seed` or --seed)")))
    }
}
