//! Mean binary cross-entropy over output channels:
//! `L = −(1/N)·Σ_c [y_c·ln ŷ_c + (1−y_c)·ln(1−ŷ_c)]`.
//!
//! Three entry points share that value. The probability form clamps `ŷ`;
//! the two logit forms are saturation-safe and never clamp inside the
//! representable range.

use super::ops::sigmoid_scalar;
use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// Gradient with respect to the input of the loss (probabilities or logits).
    pub grad: Vec<f64>,
}

fn check_inputs(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::shape(
            "cross_entropy",
            format!("prediction len {}", pred.len()),
            format!("target len {}", target.len()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Domain("cross entropy over zero outputs".into()));
    }
    if target.iter().any(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::Domain("cross entropy targets must be 0 or 1".into()));
    }
    Ok(())
}

/// Loss on probabilities; the gradient is with respect to `y_hat`.
pub fn cross_entropy_probs(y_hat: &[f64], target: &[f64]) -> Result<LossGrad> {
    check_inputs(y_hat, target)?;
    let n = y_hat.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(y_hat.len());
    for (&p, &y) in y_hat.iter().zip(target) {
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad.push(-(y / p - (1.0 - y) / (1.0 - p)) / n);
    }
    Ok(LossGrad { loss: loss / n, grad })
}

/// `ŷ = sigmoid(z)` per channel, fused with the loss; gradient with respect to `z`.
pub fn cross_entropy_sigmoid_logits(logits: &[f64], target: &[f64]) -> Result<LossGrad> {
    check_inputs(logits, target)?;
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(target) {
        // −[y ln σ(z) + (1−y) ln(1−σ(z))] = softplus(z) − y·z
        let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
        loss += softplus - y * z;
        grad.push((sigmoid_scalar(z) - y) / n);
    }
    Ok(LossGrad { loss: loss / n, grad })
}

/// `ŷ = softmax(z)` fused with the per-channel binary terms; gradient with respect to `z`.
pub fn cross_entropy_softmax_logits(logits: &[f64], target: &[f64]) -> Result<LossGrad> {
    check_inputs(logits, target)?;
    if logits.len() < 2 {
        return Err(Error::Domain("softmax cross entropy needs at least two classes".into()));
    }
    let n = logits.len() as f64;
    let lse_all = log_sum_exp(logits.iter().copied());
    let max_log_odds = ((1.0 - PROB_CLAMP) / PROB_CLAMP).ln();

    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(logits.len());
    // d_c = ŷ_c · ∂L/∂ŷ_c
    let mut d = Vec::with_capacity(logits.len());
    for (c, (&z, &y)) in logits.iter().zip(target).enumerate() {
        let log_p = z - lse_all;
        let lse_rest = log_sum_exp(logits.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v));
        let log_not_p = lse_rest - lse_all;
        loss -= y * log_p + (1.0 - y) * log_not_p;
        let odds = (log_p - log_not_p).min(max_log_odds).exp();
        d.push(-(y - (1.0 - y) * odds) / n);
        probs.push(log_p.exp());
    }
    let d_sum: f64 = d.iter().sum();
    let grad = d.iter().zip(&probs).map(|(dc, p)| dc - p * d_sum).collect();
    Ok(LossGrad { loss: loss / n, grad })
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
