//! Trainable attention over instances.

use super::{AttentionWeights, PoolingKind, PoolingSpec};
use crate::error::{Error, Result};
use crate::numgrad::ops::{tanh, tanh_backward};
use crate::numgrad::{
    init_params, sigmoid, sigmoid_backward, softmax_vec, softmax_vec_backward, InitScheme, Matrix, Param,
    RngState,
};

/// One fully connected unit followed by a sigmoid, normalized with softmax
/// across the instances of the bag: `a = softmax(sigmoid(W·Xᵀ + b) / T)`.
///
/// Since the sigmoid bounds every pre-softmax logit to `(0, 1)`, at `T = 1`
/// no weight can exceed another by more than a factor `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialAttention {
    /// `1 × d_in`
    pub w: Param,
    /// `1 × 1`
    pub b: Param,
}

#[derive(Clone, Debug)]
pub struct SpatialCache {
    gate: Matrix,
    weights: Vec<f64>,
}

impl SpatialAttention {
    pub fn new(d_in: usize, prefix: &str, rng: &mut RngState) -> Result<Self> {
        Ok(Self {
            w: Param::new(format!("{prefix}.w"), init_params(1, d_in, InitScheme::GlorotUniform, rng)?),
            b: Param::new(format!("{prefix}.b"), init_params(1, 1, InitScheme::Zeros, rng)?),
        })
    }

    pub fn zeros(d_in: usize, prefix: &str) -> Self {
        Self {
            w: Param::new(format!("{prefix}.w"), Matrix::zeros(1, d_in)),
            b: Param::new(format!("{prefix}.b"), Matrix::zeros(1, 1)),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w.value.cols()
    }

    pub fn forward(&self, x: &Matrix, temperature: f64) -> Result<(AttentionWeights, SpatialCache)> {
        check_input(x, self.d_in(), "attention_weights")?;
        let bias = self.b.value.get(0, 0);
        let logits = x.matmul_nt(&self.w.value)?.map(|v| v + bias);
        let gate = sigmoid(&logits);
        let scaled: Vec<f64> = gate.as_slice().iter().map(|g| g / temperature).collect();
        let weights = softmax_vec(&scaled)?;
        Ok((
            AttentionWeights::new(weights.clone()),
            SpatialCache { gate, weights },
        ))
    }

    /// Accumulates into `w.grad`, `b.grad` and returns `∂/∂X`.
    pub fn backward(&mut self, x: &Matrix, cache: &SpatialCache, temperature: f64, d_weights: &[f64]) -> Result<Matrix> {
        check_input(x, self.d_in(), "attention_backward")?;
        let d_scaled = softmax_vec_backward(&cache.weights, d_weights)?;
        let d_gate = Matrix::column_vector(d_scaled.into_iter().map(|g| g / temperature).collect());
        let d_logits = sigmoid_backward(&cache.gate, &d_gate)?;
        d_logits.accumulate_tn(x, &mut self.w.grad)?;
        self.b.grad.as_mut_slice()[0] += d_logits.sum();
        d_logits.matmul(&self.w.value)
    }
}

/// `a = softmax(w·(tanh(V·xᵀ) ⊙ sigm(U·xᵀ)) / T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GatedAttention {
    /// `L × d_in`
    pub v: Param,
    /// `L × d_in`
    pub u: Param,
    /// `1 × L`
    pub w: Param,
}

#[derive(Clone, Debug)]
pub struct GatedCache {
    tanh_part: Matrix,
    sigm_part: Matrix,
    hidden: Matrix,
    weights: Vec<f64>,
}

impl GatedAttention {
    pub fn new(d_in: usize, hidden: usize, prefix: &str, rng: &mut RngState) -> Result<Self> {
        // stored as L × d_in, so fan-in and fan-out are swapped relative to init_params
        let v = init_params(d_in, hidden, InitScheme::GlorotUniform, rng)?.transpose();
        let u = init_params(d_in, hidden, InitScheme::GlorotUniform, rng)?.transpose();
        let w = init_params(hidden, 1, InitScheme::GlorotUniform, rng)?.transpose();
        Ok(Self {
            v: Param::new(format!("{prefix}.v"), v),
            u: Param::new(format!("{prefix}.u"), u),
            w: Param::new(format!("{prefix}.w"), w),
        })
    }

    pub fn d_in(&self) -> usize {
        self.v.value.cols()
    }

    pub fn hidden(&self) -> usize {
        self.v.value.rows()
    }

    pub fn forward(&self, x: &Matrix, temperature: f64) -> Result<(AttentionWeights, GatedCache)> {
        check_input(x, self.d_in(), "gated_attention_weights")?;
        if self.u.value.shape() != self.v.value.shape() || self.w.value.shape() != (1, self.hidden()) {
            return Err(Error::shape(
                "gated_attention_weights",
                format!("V {} U {}", self.v.value.shape_str(), self.u.value.shape_str()),
                format!("w {}", self.w.value.shape_str()),
            ));
        }
        let tanh_part = tanh(&x.matmul_nt(&self.v.value)?);
        let sigm_part = sigmoid(&x.matmul_nt(&self.u.value)?);
        let hidden_values = tanh_part
            .as_slice()
            .iter()
            .zip(sigm_part.as_slice())
            .map(|(t, s)| t * s)
            .collect();
        let hidden = Matrix::new(tanh_part.rows(), tanh_part.cols(), hidden_values)?;
        let scores = hidden.matmul_nt(&self.w.value)?;
        let scaled: Vec<f64> = scores.as_slice().iter().map(|s| s / temperature).collect();
        let weights = softmax_vec(&scaled)?;
        Ok((
            AttentionWeights::new(weights.clone()),
            GatedCache {
                tanh_part,
                sigm_part,
                hidden,
                weights,
            },
        ))
    }

    pub fn backward(&mut self, x: &Matrix, cache: &GatedCache, temperature: f64, d_weights: &[f64]) -> Result<Matrix> {
        check_input(x, self.d_in(), "gated_attention_backward")?;
        let d_scaled = softmax_vec_backward(&cache.weights, d_weights)?;
        let d_scores = Matrix::column_vector(d_scaled.into_iter().map(|g| g / temperature).collect());
        d_scores.accumulate_tn(&cache.hidden, &mut self.w.grad)?;
        let d_hidden = d_scores.matmul(&self.w.value)?;

        let k = d_hidden.rows();
        let l = d_hidden.cols();
        let mut d_tanh = Matrix::zeros(k, l);
        let mut d_sigm = Matrix::zeros(k, l);
        for (i, &g) in d_hidden.as_slice().iter().enumerate() {
            d_tanh.as_mut_slice()[i] = g * cache.sigm_part.as_slice()[i];
            d_sigm.as_mut_slice()[i] = g * cache.tanh_part.as_slice()[i];
        }
        let d_pre_v = tanh_backward(&cache.tanh_part, &d_tanh)?;
        let d_pre_u = sigmoid_backward(&cache.sigm_part, &d_sigm)?;
        d_pre_v.accumulate_tn(x, &mut self.v.grad)?;
        d_pre_u.accumulate_tn(x, &mut self.u.grad)?;

        let mut dx = d_pre_v.matmul(&self.v.value)?;
        dx.add_scaled(1.0, &d_pre_u.matmul(&self.u.value)?)?;
        Ok(dx)
    }
}

fn check_input(x: &Matrix, d_in: usize, op: &'static str) -> Result<()> {
    if x.cols() != d_in {
        return Err(Error::shape(op, x.shape_str(), format!("attention input width {d_in}")));
    }
    if x.rows() == 0 {
        return Err(Error::Domain(format!("{op} over an empty bag")));
    }
    Ok(())
}

/// Either attention form, as selected by a [`PoolingSpec`].
#[derive(Clone, Debug, PartialEq)]
pub enum AttentionModule {
    Spatial(SpatialAttention),
    Gated(GatedAttention),
}

#[derive(Clone, Debug)]
pub enum AttentionCache {
    Spatial(SpatialCache),
    Gated(GatedCache),
}

impl AttentionModule {
    /// `None` for the non-attention kinds.
    pub fn for_spec(spec: &PoolingSpec, d_in: usize, rng: &mut RngState) -> Result<Option<Self>> {
        Ok(match spec.kind {
            PoolingKind::Attention => Some(Self::Spatial(SpatialAttention::new(d_in, "attention", rng)?)),
            PoolingKind::Gated => Some(Self::Gated(GatedAttention::new(d_in, spec.gated_hidden, "attention", rng)?)),
            PoolingKind::Max | PoolingKind::Mean => None,
        })
    }

    pub fn forward(&self, x: &Matrix, temperature: f64) -> Result<(AttentionWeights, AttentionCache)> {
        match self {
            Self::Spatial(m) => m.forward(x, temperature).map(|(a, c)| (a, AttentionCache::Spatial(c))),
            Self::Gated(m) => m.forward(x, temperature).map(|(a, c)| (a, AttentionCache::Gated(c))),
        }
    }

    pub fn backward(&mut self, x: &Matrix, cache: &AttentionCache, temperature: f64, d_weights: &[f64]) -> Result<Matrix> {
        match (self, cache) {
            (Self::Spatial(m), AttentionCache::Spatial(c)) => m.backward(x, c, temperature, d_weights),
            (Self::Gated(m), AttentionCache::Gated(c)) => m.backward(x, c, temperature, d_weights),
            _ => Err(Error::Contract("attention cache from a different module kind".into())),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Self::Spatial(m) => vec![&m.w, &m.b],
            Self::Gated(m) => vec![&m.v, &m.u, &m.w],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Self::Spatial(m) => vec![&mut m.w, &mut m.b],
            Self::Gated(m) => vec![&mut m.v, &mut m.u, &mut m.w],
        }
    }

    pub fn d_in(&self) -> usize {
        match self {
            Self::Spatial(m) => m.d_in(),
            Self::Gated(m) => m.d_in(),
        }
    }
}
