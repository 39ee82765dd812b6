//! The bag classifier: dense backbone, MIL pooling and bag-level head, with
//! training, evaluation, key-instance ranking and model files.

mod config;
mod metrics;
mod model;
mod persist;
mod train;

pub use config::{HeadPlacement, ModelConfig, TrainConfig, DEFAULT_HIDDEN};
pub use metrics::{evaluate, Metrics};
pub use model::{Dense, Model, Prediction};
pub use persist::{load_model, model_from_str, model_to_string, save_model, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use train::{train, train_with_callback, TrainHistory};
