//! End-to-end workflows: dataset generation, validation of generated
//! structures by re-homogenization, and the target-property demo.

mod constants;
mod generate;
mod neighbors;
mod stats;
mod validate;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::diffusion::DiffusionError;
use crate::homogenization::HomogenizationError;
use crate::phase_field::PhaseFieldError;

pub use constants::{dmat_from_constants, DemoRequest};
pub use generate::{compress_to_image, gen_data, generate_base_samples, generate_sample, GenDataConfig};
pub use neighbors::{mean_squared_distance, report_neighbors, NeighborReport};
pub use stats::{pearson, Summary};
pub use validate::{
    demo, generate, validate, validate_images, DemoOutcome, TemperatureSummary, ValidateConfig, ValidationReport,
    ValidationRow,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("Poisson ratio {0} is at or beyond the incompressible limit")]
    PoissonLimit(f64),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    PhaseField(#[from] PhaseFieldError),
    #[error(transparent)]
    Homogenization(#[from] HomogenizationError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
