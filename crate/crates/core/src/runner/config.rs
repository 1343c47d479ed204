use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingFormat, LoadOptions};
use crate::error::{Error, Result};
use crate::probe::{MlpConfig, Optimizer, TrainConfig};
use crate::tasks::{Direction, SamplingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSource {
    pub path: PathBuf,
    pub format: EmbeddingFormat,
    /// Keep only the first rows of the file (files are usually sorted by
    /// frequency).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstitutionTasks {
    #[serde(default = "default_positions")]
    pub positions: Vec<usize>,
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
}

fn default_positions() -> Vec<usize> {
    (1..=10).collect()
}

fn default_directions() -> Vec<Direction> {
    vec![Direction::Forward, Direction::Backward]
}

impl Default for ConstitutionTasks {
    fn default() -> Self {
        ConstitutionTasks {
            positions: default_positions(),
            directions: default_directions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSelection {
    #[serde(default)]
    pub length: bool,
    #[serde(default)]
    pub substring: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constitution: Option<ConstitutionTasks>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingOptions {
    #[serde(default = "default_negative_ratio")]
    pub negative_ratio: f64,
    #[serde(default = "default_max_eval_pairs")]
    pub max_eval_pairs: Option<usize>,
}

fn default_negative_ratio() -> f64 {
    SamplingConfig::default().negative_ratio
}

fn default_max_eval_pairs() -> Option<usize> {
    SamplingConfig::default().max_eval_pairs
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            negative_ratio: default_negative_ratio(),
            max_eval_pairs: default_max_eval_pairs(),
        }
    }
}

/// Floating-point type the probes are trained in. Embeddings are parsed
/// and stored as `f64` either way, and metrics are computed in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default)]
    pub precision: Precision,
}

fn default_hidden() -> usize {
    MlpConfig::DEFAULT_HIDDEN
}

fn default_layers() -> usize {
    MlpConfig::DEFAULT_LAYERS
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            hidden_dim: default_hidden(),
            n_layers: default_layers(),
            precision: Precision::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: Optimizer,
}

fn default_epochs() -> usize {
    TrainConfig::default().epochs
}

fn default_batch() -> usize {
    TrainConfig::default().batch_size
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: default_epochs(),
            batch_size: default_batch(),
            optimizer: Optimizer::default(),
        }
    }
}

fn default_folds() -> usize {
    10
}

fn default_workers() -> usize {
    1
}

/// A complete probing experiment. Every random stream is derived from
/// `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub embeddings: EmbeddingSource,
    #[serde(default)]
    pub load: LoadOptions,
    pub tasks: TaskSelection,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub sampling: SamplingOptions,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Probes trained concurrently. Results do not depend on it.
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
}

impl ExperimentConfig {
    /// Parses a JSON config; relative paths are taken from the config
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if cfg.embeddings.path.is_relative() {
            cfg.embeddings.path = base.join(&cfg.embeddings.path);
        }
        if let Some(out) = &cfg.output_dir {
            if out.is_relative() {
                cfg.output_dir = Some(base.join(out));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        let t = &self.tasks;
        if !t.length && !t.substring && t.constitution.is_none() {
            return Err(Error::Config("no tasks selected".into()));
        }
        if let Some(c) = &t.constitution {
            if c.positions.is_empty() || c.directions.is_empty() {
                return Err(Error::Config("constitution needs positions and directions".into()));
            }
            if c.positions.contains(&0) {
                return Err(Error::Config("character positions start at 1".into()));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.train_config(0).validate()?;
        MlpConfig::new(1, 1)
            .with_hidden(self.model.hidden_dim)
            .with_layers(self.model.n_layers)
            .validate()?;
        if !self.embeddings.path.exists() {
            return Err(Error::Config(format!(
                "embedding file {} does not exist",
                self.embeddings.path.display()
            )));
        }
        Ok(())
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            optimizer: self.train.optimizer,
            seed,
        }
    }

    pub fn sampling_config(&self, seed: u64) -> SamplingConfig {
        SamplingConfig {
            seed,
            negative_ratio: self.sampling.negative_ratio,
            max_eval_pairs: self.sampling.max_eval_pairs,
        }
    }
}
