use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::mildata::Bag;
use crate::milpool::{
    max_pool, max_pool_backward, mean_pool, mean_pool_backward, weighted_pool, weighted_pool_backward,
    AttentionCache, AttentionModule, AttentionWeights, InstanceScores, PoolingKind,
};
use crate::numgrad::{
    affine, affine_backward, affine_backward_params, cross_entropy_probs, cross_entropy_sigmoid_logits, cross_entropy_softmax_logits,
    dropout, init_params, relu, relu_backward, sigmoid, sigmoid_backward, softmax_vec, softmax_vec_backward,
    DropoutMask, InitScheme, Matrix, Param, Parameterized, RngState,
};

/// Fully connected layer `X·W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Param,
    pub b: Param,
}

impl Dense {
    pub fn new(d_in: usize, d_out: usize, prefix: &str, rng: &mut RngState) -> Result<Self> {
        Ok(Self {
            w: Param::new(format!("{prefix}.w"), init_params(d_in, d_out, InitScheme::GlorotUniform, rng)?),
            b: Param::new(format!("{prefix}.b"), init_params(1, d_out, InitScheme::Zeros, rng)?),
        })
    }
}

/// Result of one forward pass over a bag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Bag probability: `[θ]` for binary models, a distribution over classes otherwise.
    pub bag_prob: Vec<f64>,
    /// Instance weights; uniform for max and mean pooling.
    pub attention: AttentionWeights,
    /// Per-instance class probabilities, `k × output_dim`.
    pub instance_scores: InstanceScores,
}

impl Prediction {
    pub fn class_probabilities(&self) -> Vec<f64> {
        match self.bag_prob.as_slice() {
            [theta] => vec![1.0 - theta, *theta],
            probs => probs.to_vec(),
        }
    }

    /// Binary: positive iff `θ > 0.5`. Multi-class: argmax, ties to the lowest class.
    pub fn predicted_class(&self) -> usize {
        let probs = self.class_probabilities();
        let mut best = 0;
        for (c, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = c;
            }
        }
        best
    }
}

struct LayerTrace {
    input: Matrix,
    pre: Matrix,
    mask: DropoutMask,
}

enum InstancePool {
    Weighted { weights: AttentionWeights, cache: AttentionCache },
    /// `raw` is the column maximum before renormalization (multi-class only).
    Max { argmax: Vec<usize>, raw: Vec<f64> },
    Mean,
}

enum PoolTrace {
    Embedding {
        weights: AttentionWeights,
        cache: AttentionCache,
        pooled: Matrix,
        logits: Vec<f64>,
    },
    Instances {
        probs: Matrix,
        pool: InstancePool,
    },
}

struct Trace {
    layers: Vec<LayerTrace>,
    embeddings: Matrix,
    pool: PoolTrace,
    bag_prob: Vec<f64>,
}

/// Instance-level backbone, MIL pooling and bag-level classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    backbone: Vec<Dense>,
    attention: Option<AttentionModule>,
    head: Dense,
    grad_fault: Option<f64>,
}

impl Model {
    /// Builds and initializes a model; deterministic given `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = RngState::new(config.seed);
        let mut backbone = Vec::with_capacity(config.hidden.len());
        let mut width = config.input_dim;
        for (i, &h) in config.hidden.iter().enumerate() {
            backbone.push(Dense::new(width, h, &format!("backbone.{i}"), &mut rng)?);
            width = h;
        }
        let attention = AttentionModule::for_spec(&config.pooling, width, &mut rng)?;
        let head = Dense::new(width, config.output_dim(), "head", &mut rng)?;
        Ok(Self {
            config,
            backbone,
            attention,
            head,
            grad_fault: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn pooling_kind(&self) -> PoolingKind {
        self.config.pooling.kind
    }

    pub fn backbone(&self) -> &[Dense] {
        &self.backbone
    }

    pub fn attention(&self) -> Option<&AttentionModule> {
        self.attention.as_ref()
    }

    pub fn attention_mut(&mut self) -> Option<&mut AttentionModule> {
        self.attention.as_mut()
    }

    pub fn head(&self) -> &Dense {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut Dense {
        &mut self.head
    }

    /// Scales the classifier weight gradient after every backward pass.
    /// Exists so gradient checks can be shown to catch a broken backward pass.
    #[doc(hidden)]
    pub fn inject_gradient_fault(&mut self, scale: Option<f64>) {
        self.grad_fault = scale;
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::shape(
                "forward_bag",
                format!("model input width {}", self.config.input_dim),
                format!("bag width {}", x.cols()),
            ));
        }
        if x.rows() == 0 {
            return Err(Error::Domain("bag has no instances".into()));
        }
        Ok(())
    }

    /// Backbone embeddings, `k × embedding_dim`.
    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let mut h = x.clone();
        for layer in &self.backbone {
            h = relu(&affine(&h, &layer.w, &layer.b)?);
        }
        Ok(h)
    }

    fn forward_trace(&self, x: &Matrix, train_mode: bool, rng: &mut RngState) -> Result<Trace> {
        self.check_width(x)?;
        let mut layers = Vec::with_capacity(self.backbone.len());
        let mut h = x.clone();
        for layer in &self.backbone {
            let pre = affine(&h, &layer.w, &layer.b)?;
            let (out, mask) = dropout(&relu(&pre), self.config.dropout_rate, rng, train_mode)?;
            layers.push(LayerTrace { input: h, pre, mask });
            h = out;
        }
        let temperature = self.config.pooling.temperature;

        let (pool, bag_prob) = if self.config.pools_embeddings() {
            let attention = self.attention.as_ref().ok_or_else(missing_attention)?;
            let (weights, cache) = attention.forward(&h, temperature)?;
            let pooled = Matrix::row_vector(weighted_pool(&h, &weights)?);
            let logits = affine(&pooled, &self.head.w, &self.head.b)?.into_vec();
            let bag_prob = output_probabilities(&logits)?;
            (
                PoolTrace::Embedding {
                    weights,
                    cache,
                    pooled,
                    logits,
                },
                bag_prob,
            )
        } else {
            let probs = instance_probabilities(&affine(&h, &self.head.w, &self.head.b)?)?;
            let (pool, bag_prob) = match self.config.pooling.kind {
                PoolingKind::Attention | PoolingKind::Gated => {
                    let attention = self.attention.as_ref().ok_or_else(missing_attention)?;
                    let (weights, cache) = attention.forward(&h, temperature)?;
                    let theta = weighted_pool(&probs, &weights)?;
                    (InstancePool::Weighted { weights, cache }, theta)
                }
                PoolingKind::Max => {
                    let (raw, argmax) = max_pool(&probs)?;
                    let theta = if raw.len() > 1 {
                        let total: f64 = raw.iter().sum();
                        raw.iter().map(|m| m / total).collect()
                    } else {
                        raw.clone()
                    };
                    (InstancePool::Max { argmax, raw }, theta)
                }
                PoolingKind::Mean => (InstancePool::Mean, mean_pool(&probs)?),
            };
            (PoolTrace::Instances { probs, pool }, bag_prob)
        };

        if bag_prob.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("non-finite bag probability".into()));
        }
        Ok(Trace {
            layers,
            embeddings: h,
            pool,
            bag_prob,
        })
    }

    /// Forward pass over one bag. Evaluation mode is deterministic and ignores `rng`.
    pub fn forward_bag(&self, bag: &Bag, train_mode: bool, rng: &mut RngState) -> Result<Prediction> {
        self.predict_instances(&bag.instances, train_mode, rng)
    }

    pub fn predict_instances(&self, x: &Matrix, train_mode: bool, rng: &mut RngState) -> Result<Prediction> {
        let trace = self.forward_trace(x, train_mode, rng)?;
        let k = x.rows();
        let (attention, instance_scores) = match trace.pool {
            PoolTrace::Embedding { weights, .. } => {
                let logits = affine(&trace.embeddings, &self.head.w, &self.head.b)?;
                (weights, instance_probabilities(&logits)?)
            }
            PoolTrace::Instances { probs, pool } => {
                let weights = match pool {
                    InstancePool::Weighted { weights, .. } => weights,
                    _ => AttentionWeights::uniform(k),
                };
                (weights, probs)
            }
        };
        Ok(Prediction {
            bag_prob: trace.bag_prob,
            attention,
            instance_scores,
        })
    }

    /// Deterministic evaluation-mode prediction.
    pub fn predict(&self, bag: &Bag) -> Result<Prediction> {
        self.forward_bag(bag, false, &mut RngState::new(0))
    }

    fn targets(&self, label: usize) -> Result<Vec<f64>> {
        if label >= self.config.class_count {
            return Err(Error::Domain(format!(
                "label {label} out of range for {} classes",
                self.config.class_count
            )));
        }
        Ok(if self.config.output_dim() == 1 {
            vec![label as f64]
        } else {
            (0..self.config.class_count).map(|c| f64::from(u8::from(c == label))).collect()
        })
    }

    /// Bag loss without touching gradients.
    pub fn bag_loss(&self, bag: &Bag, train_mode: bool, rng: &mut RngState) -> Result<f64> {
        let targets = self.targets(bag.label)?;
        let trace = self.forward_trace(&bag.instances, train_mode, rng)?;
        Ok(loss_of(&trace, &targets)?.0)
    }

    /// Zeroes all gradients, then populates them with the gradient of the bag loss.
    pub fn bag_loss_grads(&mut self, bag: &Bag, train_mode: bool, rng: &mut RngState) -> Result<f64> {
        let targets = self.targets(bag.label)?;
        let trace = self.forward_trace(&bag.instances, train_mode, rng)?;
        self.zero_grads();
        let (loss, upstream) = loss_of(&trace, &targets)?;
        self.backward(trace, upstream)?;
        if let Some(scale) = self.grad_fault {
            self.head.w.grad.scale(scale);
        }
        Ok(loss)
    }

    fn backward(&mut self, trace: Trace, upstream: Vec<f64>) -> Result<()> {
        let temperature = self.config.pooling.temperature;
        let h = &trace.embeddings;
        let mut d_h = match trace.pool {
            PoolTrace::Embedding {
                weights, cache, pooled, ..
            } => {
                let d_logits = Matrix::row_vector(upstream);
                let d_pooled = affine_backward(&pooled, &mut self.head.w, &mut self.head.b, &d_logits)?;
                let (mut d_h, d_weights) = weighted_pool_backward(h, &weights, d_pooled.as_slice())?;
                let attention = self.attention.as_mut().ok_or_else(missing_attention)?;
                d_h.add_scaled(1.0, &attention.backward(h, &cache, temperature, &d_weights)?)?;
                d_h
            }
            PoolTrace::Instances { probs, pool } => {
                let k = probs.rows();
                let mut d_attention_input = None;
                let d_probs = match pool {
                    InstancePool::Weighted { weights, cache } => {
                        let (d_probs, d_weights) = weighted_pool_backward(&probs, &weights, &upstream)?;
                        let attention = self.attention.as_mut().ok_or_else(missing_attention)?;
                        d_attention_input = Some(attention.backward(h, &cache, temperature, &d_weights)?);
                        d_probs
                    }
                    InstancePool::Max { argmax, raw } => {
                        let d_raw = if raw.len() > 1 {
                            // through q = m / Σm
                            let total: f64 = raw.iter().sum();
                            let dot: f64 = upstream.iter().zip(&raw).map(|(g, m)| g * m / total).sum();
                            upstream.iter().map(|g| (g - dot) / total).collect()
                        } else {
                            upstream
                        };
                        max_pool_backward(&argmax, k, &d_raw)?
                    }
                    InstancePool::Mean => mean_pool_backward(k, &upstream)?,
                };
                let d_logits = instance_probabilities_backward(&probs, &d_probs)?;
                let mut d_h = affine_backward(h, &mut self.head.w, &mut self.head.b, &d_logits)?;
                if let Some(extra) = d_attention_input {
                    d_h.add_scaled(1.0, &extra)?;
                }
                d_h
            }
        };

        for (i, (layer, t)) in self.backbone.iter_mut().zip(&trace.layers).enumerate().rev() {
            let d_act = t.mask.backward(&d_h)?;
            let d_pre = relu_backward(&t.pre, &d_act)?;
            if i == 0 {
                // the raw features need no gradient
                affine_backward_params(&t.input, &mut layer.w, &mut layer.b, &d_pre)?;
                break;
            }
            d_h = affine_backward(&t.input, &mut layer.w, &mut layer.b, &d_pre)?;
        }
        Ok(())
    }

    /// Instances ranked by descending attention weight (ties by ascending index).
    pub fn key_instances(&self, bag: &Bag, top_m: usize) -> Result<Vec<(usize, f64)>> {
        if !self.config.pooling.kind.is_attention() {
            return Err(Error::Unsupported(format!(
                "key instances need an attention model, this one uses {} pooling",
                self.config.pooling.kind
            )));
        }
        if top_m == 0 || top_m > bag.len() {
            return Err(Error::Domain(format!("top_m {top_m} outside 1..={}", bag.len())));
        }
        let prediction = self.predict(bag)?;
        let mut ranked: Vec<(usize, f64)> = prediction.attention.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(top_m);
        Ok(ranked)
    }
}

impl Parameterized for Model {
    fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        for layer in &self.backbone {
            out.push(&layer.w);
            out.push(&layer.b);
        }
        if let Some(a) = &self.attention {
            out.extend(a.params());
        }
        out.push(&self.head.w);
        out.push(&self.head.b);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        for layer in &mut self.backbone {
            out.push(&mut layer.w);
            out.push(&mut layer.b);
        }
        if let Some(a) = &mut self.attention {
            out.extend(a.params_mut());
        }
        out.push(&mut self.head.w);
        out.push(&mut self.head.b);
        out
    }
}

fn missing_attention() -> Error {
    Error::Contract("attention pooling without attention parameters".into())
}

fn output_probabilities(logits: &[f64]) -> Result<Vec<f64>> {
    match logits {
        [z] => Ok(vec![crate::numgrad::sigmoid_scalar(*z)]),
        _ => softmax_vec(logits),
    }
}

/// Row-wise sigmoid (one column) or softmax (several columns).
fn instance_probabilities(logits: &Matrix) -> Result<Matrix> {
    if logits.cols() == 1 {
        return Ok(sigmoid(logits));
    }
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        out.row_mut(r).copy_from_slice(&softmax_vec(logits.row(r))?);
    }
    Ok(out)
}

fn instance_probabilities_backward(probs: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    if probs.cols() == 1 {
        return sigmoid_backward(probs, upstream);
    }
    let mut out = Matrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        out.row_mut(r)
            .copy_from_slice(&softmax_vec_backward(probs.row(r), upstream.row(r))?);
    }
    Ok(out)
}

/// Loss and its gradient with respect to the logits (embedding path) or the bag
/// probabilities (instance path).
fn loss_of(trace: &Trace, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let lg = match &trace.pool {
        PoolTrace::Embedding { logits, .. } if logits.len() == 1 => cross_entropy_sigmoid_logits(logits, targets)?,
        PoolTrace::Embedding { logits, .. } => cross_entropy_softmax_logits(logits, targets)?,
        PoolTrace::Instances { .. } => cross_entropy_probs(&trace.bag_prob, targets)?,
    };
    Ok((lg.loss, lg.grad))
}
