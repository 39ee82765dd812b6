//! Multiple instance learning with trainable attention pooling.
//!
//! A bag of instance feature vectors is mapped through a dense backbone
//! (`fc-256 → fc-128 → fc-64`, each with ReLU and dropout), aggregated by a
//! permutation-invariant pooling operator and classified at the bag level.
//! Everything, including backpropagation, is implemented on top of the small
//! [`numgrad`] core so every gradient can be checked against finite differences.
//!
//! Modules:
//! - [`numgrad`]: matrices, layers, losses, optimizers, gradient checking
//! - [`mildata`]: bags, datasets, file loaders, normalization, folds, synthetic bags
//! - [`milpool`]: attention, gated-attention, max and mean pooling
//! - [`milnet`]: the bag classifier, training, evaluation, key-instance ranking
//! - [`bench`]: cross-validation experiments and reports behind the `attnmil` binary

pub mod bench;
pub mod error;
pub mod mildata;
pub mod milnet;
pub mod milpool;
pub mod numgrad;

pub use error::{Error, Result};
