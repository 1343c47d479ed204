use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a probe: `n_layers` affine maps with ReLU between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub in_dim: usize,
    #[serde(default = "MlpConfig::default_hidden")]
    pub hidden_dim: usize,
    pub out_dim: usize,
    #[serde(default = "MlpConfig::default_layers")]
    pub n_layers: usize,
}

impl MlpConfig {
    pub const DEFAULT_HIDDEN: usize = 2096;
    pub const DEFAULT_LAYERS: usize = 3;

    fn default_hidden() -> usize {
        Self::DEFAULT_HIDDEN
    }

    fn default_layers() -> usize {
        Self::DEFAULT_LAYERS
    }

    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        MlpConfig {
            in_dim,
            hidden_dim: Self::DEFAULT_HIDDEN,
            out_dim,
            n_layers: Self::DEFAULT_LAYERS,
        }
    }

    pub fn with_hidden(mut self, hidden_dim: usize) -> Self {
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn with_layers(mut self, n_layers: usize) -> Self {
        self.n_layers = n_layers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 || self.n_layers == 0 {
            return Err(Error::Config(format!("degenerate probe shape {self:?}")));
        }
        if self.n_layers > 1 && self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each affine map in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        (0..self.n_layers)
            .map(|l| {
                let i = if l == 0 { self.in_dim } else { self.hidden_dim };
                let o = if l + 1 == self.n_layers { self.out_dim } else { self.hidden_dim };
                (i, o)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Optimizer {
    Adam {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
    Sgd {
        learning_rate: f64,
    },
}

fn default_lr() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            learning_rate: default_lr(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_eps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    10
}
fn default_batch() -> usize {
    512
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: default_epochs(),
            batch_size: default_batch(),
            optimizer: Optimizer::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        let lr = match self.optimizer {
            Optimizer::Adam { learning_rate, .. } | Optimizer::Sgd { learning_rate } => learning_rate,
        };
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        Ok(())
    }
}
