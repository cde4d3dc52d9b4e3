use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Result;
use crate::dataset::{pool_binarize, BaseSample, Dataset, IMAGE_SIZE};
use crate::homogenization::{homogenize_with, HomogenizationConfig, PhaseMaterials};
use crate::phase_field::{run, GridShape, NucleationParams, PhaseParams};
use crate::seed::derive_seed;

const GEN_KEY: u64 = 0x6765_6e64_6174_6173;

/// Configuration of `gen-data`: simulation, compression, homogenization and splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataConfig {
    pub temperatures: Vec<f64>,
    pub per_temp: usize,
    /// Simulation grid edge; must be a multiple of 64.
    pub grid: usize,
    pub steps: u64,
    pub phase: PhaseParams,
    pub nucleation: NucleationParams,
    pub materials: PhaseMaterials,
    pub homogenization: HomogenizationConfig,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub previews: bool,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            temperatures: vec![160.0, 180.0, 200.0],
            per_temp: 10,
            grid: 128,
            steps: 5000,
            phase: PhaseParams::default(),
            nucleation: NucleationParams::default(),
            materials: PhaseMaterials::default(),
            homogenization: HomogenizationConfig::default(),
            ratios: [0.8, 0.1, 0.1],
            seed: 0,
            previews: false,
        }
    }
}

/// Simulate, compress to 64×64 and homogenize one structure.
pub fn generate_sample(cfg: &GenDataConfig, id: usize, tc: f64) -> Result<BaseSample> {
    let seed = derive_seed(cfg.seed, GEN_KEY, id as u64);
    let nucleation = NucleationParams { rng_seed: seed, ..cfg.nucleation.clone() };
    let micro = run(tc, GridShape::square(cfg.grid), cfg.steps, &cfg.phase, &nucleation)?;
    let cells = compress_to_image(&micro.to_phi())?;
    let phi = cells.mapv(f64::from);
    let h = homogenize_with(&phi, &cfg.materials, &cfg.homogenization)?;
    Ok(BaseSample { id, cells, tc, seed, raw_condition: h.d.condition() })
}

/// Pool a square simulation raster down to the generator image size.
pub fn compress_to_image(phi: &Array2<f64>) -> Result<Array2<u8>> {
    let n = phi.nrows();
    if n % IMAGE_SIZE != 0 || phi.ncols() != n {
        return Err(super::PipelineError::Shape(format!("simulation grid {:?} is not a square multiple of {IMAGE_SIZE}", phi.dim())));
    }
    Ok(pool_binarize(phi, n / IMAGE_SIZE)?)
}

/// All base samples, ordered by id (`temperature index · per_temp + k`).
pub fn generate_base_samples(cfg: &GenDataConfig) -> Result<Vec<BaseSample>> {
    let jobs: Vec<(usize, f64)> = cfg
        .temperatures
        .iter()
        .enumerate()
        .flat_map(|(i, &tc)| (0..cfg.per_temp).map(move |k| (i * cfg.per_temp + k, tc)))
        .collect();
    jobs.par_iter().map(|&(id, tc)| generate_sample(cfg, id, tc)).collect()
}

/// Generate, split, augment and write a dataset directory.
pub fn gen_data(cfg: &GenDataConfig, out: &Path) -> Result<Dataset> {
    let base = generate_base_samples(cfg)?;
    let ds = Dataset::build(&base, cfg.ratios, cfg.seed)?;
    ds.write(out, cfg.previews)?;
    Ok(ds)
}
