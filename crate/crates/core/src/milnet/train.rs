use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::Model;
use crate::error::{Error, Result};
use crate::mildata::Bag;
use crate::numgrad::{mix_seed, Optimizer, Parameterized, RngState};

const DROPOUT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training loss of each epoch, measured while training (dropout active).
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

impl TrainHistory {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Trains `model` in place with one optimizer step per bag.
pub fn train(model: &mut Model, bags: &[Bag], config: &TrainConfig) -> Result<TrainHistory> {
    train_with_callback(model, bags, config, |_, _| {})
}

/// As [`train`], calling `on_epoch(epoch, mean_loss)` after each epoch.
pub fn train_with_callback(
    model: &mut Model,
    bags: &[Bag],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainHistory> {
    if bags.is_empty() {
        return Err(Error::Domain("cannot train on an empty set of bags".into()));
    }
    config.validate()?;
    let mut optimizer = Optimizer::new(config.optimizer_config(), model.params());
    let mut dropout_rng = RngState::new(mix_seed(config.seed, DROPOUT_STREAM));
    let mut shuffle_rng = RngState::new(mix_seed(config.seed, SHUFFLE_STREAM));
    let mut order: Vec<usize> = (0..bags.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        if config.shuffle {
            shuffle_rng.shuffle(&mut order);
        }
        let mut total = 0.0;
        for &i in &order {
            total += model.bag_loss_grads(&bags[i], true, &mut dropout_rng)?;
            optimizer.step(model.params_mut())?;
        }
        let mean = total / bags.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Domain(format!("training loss diverged at epoch {epoch}")));
        }
        history.epoch_losses.push(mean);
        on_epoch(epoch, mean);
    }
    history.steps = optimizer.step_count();
    Ok(history)
}
