//! Conditional denoising diffusion model over two-channel images.
//!
//! The forward process uses a linear β schedule; the reverse process is
//! learned as an ε-prediction U-Net conditioned on the sum of a sinusoidal
//! time embedding and a tiled three-component condition vector.

mod checkpoint;
mod embedding;
mod net;
mod sample;
mod schedule;
mod train;

pub use checkpoint::{Checkpoint, CheckpointMeta, TensorRecord, CHECKPOINT_VERSION};
pub use embedding::{embed_condition, embed_time, joint_embedding, EMBED_DIM};
pub use net::{embedding_batch, NoisePredictor, ParamStore, UNet, UNetConfig, ZeroPredictor};
pub use sample::{p_sample_loop, p_sample_loop_raw};
pub use schedule::{NoiseSchedule, ScheduleConfig};
pub use train::{Adam, Example, TrainConfig, Trainer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { step: u64, loss: f32 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint metadata: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = DiffusionError> = std::result::Result<T, E>;
