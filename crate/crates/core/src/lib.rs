//! Inverse design of two-phase crystalline/amorphous resin microstructures.
//!
//! - [`phase_field`]: temperature-dependent crystal growth producing labeled rasters.
//! - [`homogenization`]: XFEM homogenized elasticity matrix of a raster.
//! - [`dataset`]: compression, temperature-pattern images, augmentation and splits.
//! - [`diffusion`]: conditional DDPM over two-channel images.
//! - [`pipeline`]: end-to-end generation, validation and the E–ν demo.

pub mod dataset;
pub mod diffusion;
pub mod homogenization;
pub mod phase_field;
pub mod pipeline;
pub mod seed;

pub use homogenization::{homogenize, homogenize_with, ElasticityMatrix, HomogenizationConfig, Homogenized, PhaseMaterials};
pub use phase_field::{GridShape, Microstructure, NucleationParams, PhaseParams, PhaseState};
