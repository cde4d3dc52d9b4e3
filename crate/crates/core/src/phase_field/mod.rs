//! Isothermal crystal growth of a semicrystalline resin.
//!
//! The order parameter `phi` (1 = crystal, 0 = amorphous) follows an
//! Allen–Cahn gradient flow of a double-well plus gradient free energy,
//! coupled to heat conduction with latent-heat release. Nuclei appear
//! stochastically at a temperature-dependent rate, and a few single-cell
//! nuclei are seeded at the start of every run.
//!
//! All temperatures are in °C. The melting point follows the linear
//! Hoffman–Weeks relation `Tm = a·Tc + b`.

mod export;
mod kernel;
mod microstructure;
mod nucleation;
mod params;
mod state;

pub use export::{read_microstructure, write_microstructure, MicrostructureMeta};
pub use kernel::{
    chemical_driving_force, dimensionless_temp, double_well_energy, free_energy, step, step_with,
};
pub use microstructure::{thickness_metric, Microstructure};
pub use nucleation::{nucleate, place_initial_nuclei};
pub use params::{NucleationParams, PhaseParams};
pub use state::{run, run_from_nuclei, run_state, GridShape, PhaseState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhaseFieldError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("time step {dt} exceeds the explicit stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },
    #[error("degenerate temperature range: Tm equals Tc ({0})")]
    DegenerateRange(f64),
    #[error("non-finite field value at step {step}, cell ({row}, {col}); dt is likely too large")]
    NumericBlowup { step: u64, row: usize, col: usize },
    #[error("crystallization temperature {tc} is outside the supported range [{lo}, {hi}]")]
    UnsupportedTemperature { tc: f64, lo: f64, hi: f64 },
    #[error("grid must be at least 2x2 and hold {needed} nuclei, got {rows}x{cols}")]
    BadGrid { rows: usize, cols: usize, needed: usize },
    #[error("microstructure io: {0}")]
    Io(#[from] std::io::Error),
    #[error("microstructure image: {0}")]
    Image(#[from] image::ImageError),
    #[error("microstructure metadata: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PhaseFieldError> = std::result::Result<T, E>;
