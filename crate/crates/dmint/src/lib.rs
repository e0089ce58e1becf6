//! Multi-view intent model: token encoder, per-component extractors, a
//! gated aggregator and four sigmoid heads, trained jointly with
//! hand-derived gradients.

pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod nn;
pub mod optim;
pub mod params;
pub mod synthetic;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use encoder::{EncodedText, Encoder, EncoderSpec, TokenMatrix};
pub use error::ModelError;
pub use model::{ablate, Component, DmintModel, Example, Forward, ModelConfig, Prediction, Task, Variant};
pub use train::{evaluate, train, EvalReport, TrainConfig, TrainOutcome};
