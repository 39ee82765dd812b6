//! MIL pooling operators.
//!
//! Every operator is permutation invariant over the instance rows of its input.
//! Attention operators produce a weight per instance; [`weighted_pool`] then
//! takes the convex combination of instance rows.

mod attention;
mod pool;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numgrad::Matrix;

pub use attention::{
    AttentionCache, AttentionModule, GatedAttention, GatedCache, SpatialAttention, SpatialCache,
};
pub use pool::{max_pool, max_pool_backward, mean_pool, mean_pool_backward, weighted_pool, weighted_pool_backward};

/// Per-instance scores or embeddings, `k × c` with one row per instance.
pub type InstanceScores = Matrix;

pub const DEFAULT_GATED_HIDDEN: usize = 64;

/// Normalized per-instance weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights(Vec<f64>);

impl AttentionWeights {
    /// Wraps weights that are known to be positive and normalized.
    pub fn new(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for AttentionWeights {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingKind {
    /// `softmax(sigmoid(W·xᵀ + b) / T)` weights.
    Attention,
    /// `softmax(w·(tanh(V·xᵀ) ⊙ sigm(U·xᵀ)) / T)` weights.
    Gated,
    Max,
    Mean,
}

impl PoolingKind {
    pub const ALL: [PoolingKind; 4] = [Self::Attention, Self::Gated, Self::Max, Self::Mean];

    pub fn is_attention(self) -> bool {
        matches!(self, Self::Attention | Self::Gated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Attention => "attention",
            Self::Gated => "gated",
            Self::Max => "max",
            Self::Mean => "mean",
        }
    }
}

impl fmt::Display for PoolingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown pooling kind `{s}` (attention, gated, max, mean)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolingSpec {
    pub kind: PoolingKind,
    /// Hidden width `L` of the gated variant.
    pub gated_hidden: usize,
    /// Softmax temperature of the attention variants; 1 leaves the logits as they are.
    pub temperature: f64,
}

impl PoolingSpec {
    pub fn new(kind: PoolingKind) -> Self {
        Self {
            kind,
            gated_hidden: DEFAULT_GATED_HIDDEN,
            temperature: 1.0,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if self.kind == PoolingKind::Gated && self.gated_hidden == 0 {
            return Err(Error::Config("gated attention hidden width must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for PoolingSpec {
    fn default() -> Self {
        Self::new(PoolingKind::Attention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_and_print() {
        for k in PoolingKind::ALL {
            assert_eq!(k.to_string().parse::<PoolingKind>().unwrap(), k);
        }
        assert!(matches!("sum".parse::<PoolingKind>(), Err(Error::Config(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(PoolingSpec::default().validate().is_ok());
        assert!(PoolingSpec::default().with_temperature(0.0).validate().is_err());
        assert!(PoolingSpec::default().with_temperature(-1.0).validate().is_err());
        let mut gated = PoolingSpec::new(PoolingKind::Gated);
        gated.gated_hidden = 0;
        assert!(gated.validate().is_err());
    }
}
