use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mildata::{load_bag_csv, load_musk_c45, Dataset};
use crate::milnet::{HeadPlacement, ModelConfig, TrainConfig, DEFAULT_HIDDEN};
use crate::milpool::{PoolingKind, PoolingSpec};
use crate::numgrad::mix_seed;

/// On-disk dataset layouts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// `bag_id,label,f0,...` with a header row.
    #[default]
    Csv,
    /// UCI MUSK C4.5 rows: `molecule,conformation,f1..f166,class`.
    Musk,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "musk" => Ok(Self::Musk),
            other => Err(Error::Config(format!("unknown data format `{other}` (expected csv or musk)"))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Musk => "musk",
        })
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::Csv => load_bag_csv(path),
        DataFormat::Musk => load_musk_c45(path),
    }
}

/// Everything an experiment depends on. Serialized verbatim into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub format: DataFormat,
    pub pooling: PoolingSpec,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub head_placement: HeadPlacement,
    /// `train.seed` is replaced by the derived per-run seed.
    pub train: TrainConfig,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub normalize: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            format: DataFormat::Csv,
            pooling: PoolingSpec::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout: ModelConfig::new(1, PoolingKind::Attention).dropout_rate,
            head_placement: HeadPlacement::default(),
            train: TrainConfig::default(),
            folds: 10,
            repeats: 5,
            seed: 0,
            normalize: true,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn with_pooling(mut self, kind: PoolingKind) -> Self {
        self.pooling.kind = kind;
        self
    }

    pub fn load_data(&self) -> Result<Dataset> {
        let path = self
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("no dataset given (--data)".into()))?;
        load_dataset(path, self.format)
    }

    /// Checks the cross-validation settings against `dataset`.
    pub fn validate_for(&self, dataset: &Dataset) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds {} must be at least 2", self.folds)));
        }
        if self.folds > dataset.len() {
            return Err(Error::Config(format!(
                "folds {} exceeds the {} bags of `{}`",
                self.folds,
                dataset.len(),
                dataset.name
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        self.train.validate()?;
        self.model_config(dataset, self.seed).validate()
    }

    pub fn model_config(&self, dataset: &Dataset, seed: u64) -> ModelConfig {
        ModelConfig {
            input_dim: dataset.d_feat,
            hidden: self.hidden.clone(),
            dropout_rate: self.dropout,
            class_count: dataset.class_count,
            pooling: self.pooling.clone(),
            head_placement: self.head_placement,
            seed,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }
}

/// Seed of the fold plan of `repeat`.
pub fn repeat_seed(base: u64, repeat: usize) -> u64 {
    mix_seed(base, repeat as u64)
}

/// Seed of the model trained for `(repeat, fold)`; independent of the total
/// number of repeats and folds, so extending an experiment leaves earlier runs alone.
pub fn run_seed(base: u64, repeat: usize, fold: usize) -> u64 {
    mix_seed(repeat_seed(base, repeat), fold as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..5 {
            assert!(seen.insert(repeat_seed(7, r)));
            for f in 0..10 {
                assert!(seen.insert(run_seed(7, r, f)));
            }
        }
        assert_eq!(run_seed(7, 3, 4), run_seed(7, 3, 4));
        assert_ne!(run_seed(7, 0, 0), run_seed(8, 0, 0));
    }

    #[test]
    fn format_names() {
        assert_eq!("MUSK".parse::<DataFormat>().unwrap(), DataFormat::Musk);
        assert!(matches!("arff".parse::<DataFormat>(), Err(Error::Config(_))));
    }
}
