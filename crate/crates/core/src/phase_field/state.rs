use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{
    place_initial_nuclei, step_with, Microstructure, NucleationParams, PhaseFieldError, PhaseParams,
    Result,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

impl GridShape {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }
}

/// Periodic order-parameter and temperature fields plus the step clock.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub phi: Array2<f64>,
    pub temp: Array2<f64>,
    pub step: u64,
    /// Crystallization (ambient) temperature, °C.
    pub tc: f64,
}

impl PhaseState {
    /// Uniform `phi`, temperature equal to `tc` everywhere.
    pub fn uniform(shape: GridShape, phi: f64, tc: f64) -> Self {
        Self {
            phi: Array2::from_elem((shape.rows, shape.cols), phi),
            temp: Array2::from_elem((shape.rows, shape.cols), tc),
            step: 0,
            tc,
        }
    }

    pub fn shape(&self) -> GridShape {
        let (rows, cols) = self.phi.dim();
        GridShape { rows, cols }
    }

    pub fn crystal_fraction(&self) -> f64 {
        let n = self.phi.len() as f64;
        self.phi.iter().filter(|&&p| p >= 0.5).count() as f64 / n
    }
}

/// Full isothermal run: seeded initial nuclei, then `steps` updates.
pub fn run(
    tc: f64,
    grid: GridShape,
    steps: u64,
    params: &PhaseParams,
    nucleation: &NucleationParams,
) -> Result<Microstructure> {
    let state = run_state(tc, grid, steps, params, nucleation)?;
    Ok(Microstructure::from_phi(&state.phi, tc, nucleation.rng_seed))
}

/// Like [`run`] but returns the final continuous fields.
pub fn run_state(
    tc: f64,
    grid: GridShape,
    steps: u64,
    params: &PhaseParams,
    nucleation: &NucleationParams,
) -> Result<PhaseState> {
    check_grid(grid, nucleation.initial_nuclei)?;
    let nuclei = place_initial_nuclei(grid.rows, grid.cols, nucleation);
    evolve(tc, grid, &nuclei, steps, params, nucleation)
}

/// Run from explicitly given nucleus positions instead of seeded ones.
pub fn run_from_nuclei(
    tc: f64,
    grid: GridShape,
    nuclei: &[(usize, usize)],
    steps: u64,
    params: &PhaseParams,
    nucleation: &NucleationParams,
) -> Result<Microstructure> {
    check_grid(grid, 0)?;
    let state = evolve(tc, grid, nuclei, steps, params, nucleation)?;
    Ok(Microstructure::from_phi(&state.phi, tc, nucleation.rng_seed))
}

fn evolve(
    tc: f64,
    grid: GridShape,
    nuclei: &[(usize, usize)],
    steps: u64,
    params: &PhaseParams,
    nucleation: &NucleationParams,
) -> Result<PhaseState> {
    params.validate()?;
    nucleation.validate()?;
    nucleation.check_tc(tc)?;
    let mut state = PhaseState::uniform(grid, 0.0, tc);
    for &(r, c) in nuclei {
        state.phi[[r % grid.rows, c % grid.cols]] = 1.0;
    }
    for _ in 0..steps {
        step_with(&mut state, params, nucleation)?;
    }
    Ok(state)
}

fn check_grid(grid: GridShape, needed: usize) -> Result<()> {
    if grid.rows < 2 || grid.cols < 2 || grid.cells() < needed {
        return Err(PhaseFieldError::BadGrid { rows: grid.rows, cols: grid.cols, needed });
    }
    Ok(())
}
