use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milpool::{PoolingKind, PoolingSpec};
use crate::numgrad::{OptimizerConfig, OptimizerKind};

pub const DEFAULT_HIDDEN: [usize; 3] = [256, 128, 64];

/// Where the bag-level classifier sits relative to attention pooling.
///
/// Only consulted for the attention kinds; max and mean pooling always score
/// instances first and pool the instance probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadPlacement {
    /// Pool the instance embeddings, then classify the pooled vector.
    #[default]
    PoolThenClassify,
    /// Classify every instance, then take the attention-weighted average of the
    /// instance probability vectors.
    ClassifyThenPool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub dropout_rate: f64,
    pub class_count: usize,
    pub pooling: PoolingSpec,
    pub head_placement: HeadPlacement,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(input_dim: usize, pooling: PoolingKind) -> Self {
        Self {
            input_dim,
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout_rate: 0.5,
            class_count: 2,
            pooling: PoolingSpec::new(pooling),
            head_placement: HeadPlacement::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = hidden;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn with_classes(mut self, class_count: usize) -> Self {
        self.class_count = class_count;
        self
    }

    /// Width of the classifier output: one sigmoid unit for binary problems,
    /// one softmax unit per class otherwise.
    pub fn output_dim(&self) -> usize {
        if self.class_count == 2 {
            1
        } else {
            self.class_count
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input_dim)
    }

    /// True when the classifier reads pooled embeddings rather than single instances.
    pub fn pools_embeddings(&self) -> bool {
        self.pooling.kind.is_attention() && self.head_placement == HeadPlacement::PoolThenClassify
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config(format!(
                "hidden widths must be non-empty and positive, got {:?}",
                self.hidden
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        if self.class_count < 2 {
            return Err(Error::Config(format!("class count {} must be at least 2", self.class_count)));
        }
        self.pooling.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// SGD momentum; ignored by Adam.
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 5e-4,
            weight_decay: 5e-4,
            momentum: 0.9,
            epochs: 50,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be non-negative", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight decay {} must be non-negative", self.weight_decay)));
        }
        Ok(())
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let base = match self.optimizer {
            OptimizerKind::Adam => OptimizerConfig::adam(self.learning_rate),
            OptimizerKind::Sgd => OptimizerConfig::sgd(self.learning_rate, self.momentum),
        };
        base.with_weight_decay(self.weight_decay)
    }
}
