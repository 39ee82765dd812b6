use serde::{Deserialize, Serialize};

use super::{Matrix, Param};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub momentum: f64,
    /// L2 coefficient added to the gradient (`g + λθ`) before the update.
    pub weight_decay: f64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }

    pub fn sgd(learning_rate: f64, momentum: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            momentum,
            ..Self::adam(learning_rate)
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }
}

#[derive(Clone, Debug)]
struct Slot {
    name: String,
    shape: (usize, usize),
    /// First moment (adam) or velocity (sgd).
    first: Matrix,
    /// Second moment; unused by sgd.
    second: Matrix,
}

/// Optimizer with per-parameter state, bound to the parameters it was created for.
#[derive(Clone, Debug)]
pub struct Optimizer {
    config: OptimizerConfig,
    step_count: u64,
    slots: Vec<Slot>,
}

impl Optimizer {
    pub fn new<'a>(config: OptimizerConfig, params: impl IntoIterator<Item = &'a Param>) -> Self {
        let slots = params
            .into_iter()
            .map(|p| {
                let (r, c) = p.value.shape();
                Slot {
                    name: p.name.clone(),
                    shape: (r, c),
                    first: Matrix::zeros(r, c),
                    second: Matrix::zeros(r, c),
                }
            })
            .collect();
        Self {
            config,
            step_count: 0,
            slots,
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update from the current gradients. Gradients are left untouched.
    pub fn step(&mut self, params: Vec<&mut Param>) -> Result<()> {
        if params.len() != self.slots.len() {
            return Err(Error::Contract(format!(
                "optimizer registered {} parameters, step received {}",
                self.slots.len(),
                params.len()
            )));
        }
        for (slot, p) in self.slots.iter().zip(&params) {
            if slot.name != p.name || slot.shape != p.value.shape() {
                return Err(Error::Contract(format!(
                    "parameter `{}` ({}) is not registered; expected `{}` ({}x{})",
                    p.name,
                    p.value.shape_str(),
                    slot.name,
                    slot.shape.0,
                    slot.shape.1
                )));
            }
        }

        self.step_count += 1;
        let cfg = &self.config;
        let t = self.step_count as i32;
        let bias1 = 1.0 - cfg.beta1.powi(t);
        let bias2 = 1.0 - cfg.beta2.powi(t);
        // lr·m̂/(√v̂ + ε) with the bias corrections folded into two scalars
        let step_size = cfg.learning_rate / bias1;
        let inv_bias2 = 1.0 / bias2;
        let (b1, b2, wd, eps) = (cfg.beta1, cfg.beta2, cfg.weight_decay, cfg.epsilon);

        for (slot, p) in self.slots.iter_mut().zip(params) {
            let values = p.value.as_mut_slice();
            let grads = p.grad.as_slice();
            match cfg.kind {
                OptimizerKind::Adam => {
                    let moments = slot.first.as_mut_slice().iter_mut().zip(slot.second.as_mut_slice());
                    for ((v, &g), (m, s)) in values.iter_mut().zip(grads).zip(moments) {
                        let g = g + wd * *v;
                        *m = b1 * *m + (1.0 - b1) * g;
                        *s = b2 * *s + (1.0 - b2) * g * g;
                        *v -= step_size * *m / ((*s * inv_bias2).sqrt() + eps);
                    }
                }
                OptimizerKind::Sgd => {
                    for ((v, &g), m) in values.iter_mut().zip(grads).zip(slot.first.as_mut_slice()) {
                        *m = cfg.momentum * *m + g + wd * *v;
                        *v -= cfg.learning_rate * *m;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(name: &str, v: f64, g: f64) -> Param {
        let mut p = Param::new(name, Matrix::from_rows(&[[v]]));
        p.grad.set(0, 0, g);
        p
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        for cfg in [OptimizerConfig::adam(0.1), OptimizerConfig::sgd(0.1, 0.9)] {
            let mut p = vec![Param::new("w", Matrix::from_rows(&[[1.5, -2.0]]))];
            let before = p[0].value.clone();
            let mut opt = Optimizer::new(cfg, p.iter());
            for _ in 0..5 {
                opt.step(p.iter_mut().collect()).unwrap();
            }
            assert_eq!(p[0].value, before);
            assert_eq!(opt.step_count(), 5);
        }
    }

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        for g in [3.0, -0.02, 1e3] {
            let mut p = vec![scalar("w", 1.0, g)];
            let mut opt = Optimizer::new(OptimizerConfig::adam(1e-3), p.iter());
            opt.step(p.iter_mut().collect()).unwrap();
            let moved = 1.0 - p[0].value.get(0, 0);
            assert!((moved.abs() - 1e-3).abs() / 1e-3 < 1e-6, "{moved}");
            assert_eq!(moved.signum(), g.signum());
        }
    }

    #[test]
    fn plain_sgd_definition() {
        let mut p = vec![scalar("w", 1.0, 2.0)];
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.1, 0.0), p.iter());
        opt.step(p.iter_mut().collect()).unwrap();
        assert!((p[0].value.get(0, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_couples_into_gradient() {
        let mut p = vec![scalar("w", 2.0, 0.0)];
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.5, 0.0).with_weight_decay(0.1), p.iter());
        opt.step(p.iter_mut().collect()).unwrap();
        assert!((p[0].value.get(0, 0) - 1.9).abs() < 1e-15);
    }

    #[test]
    fn unregistered_parameter_is_contract_error() {
        let registered = vec![scalar("w", 1.0, 1.0)];
        let mut opt = Optimizer::new(OptimizerConfig::adam(0.1), registered.iter());
        let mut other = vec![scalar("v", 1.0, 1.0)];
        assert!(matches!(opt.step(other.iter_mut().collect()), Err(Error::Contract(_))));
        let mut reshaped = vec![Param::new("w", Matrix::zeros(2, 1))];
        assert!(matches!(opt.step(reshaped.iter_mut().collect()), Err(Error::Contract(_))));
        assert_eq!(opt.step_count(), 0);
    }
}
