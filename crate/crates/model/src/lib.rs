//! The planning-informed prediction network on a candle CPU backend:
//! encoders, planning-coupled social pooling, target fusion, maneuver
//! decoding, training, evaluation and checkpoints.

pub mod batch;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod network;
pub mod params;
pub mod plan_source;
pub mod report;
pub mod train;
pub mod variant;

pub use batch::{Batch, SceneInput};
pub use config::ModelConfig;
pub use error::{ModelError, Result};
pub use network::{Decode, PipNetwork};
pub use variant::{variant_registry, ModelVariant};
