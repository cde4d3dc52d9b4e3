//! Training samples for the conditional generator.
//!
//! A sample stacks two 64×64 channels: the binarized microstructure and a
//! stripe image whose column frequency encodes the crystallization
//! temperature. The condition is the normalized `(D1111, D2222, D1212)`.

mod augment;
mod compress;
mod ippt;
mod norm;
mod splits;
mod store;

pub use augment::{augment, Augmentation};
pub use compress::{compress, pool_binarize};
pub use ippt::{decode_ippt, ippt_frequency, make_ippt, IpptDecode, IpptImage, CONFIDENCE_THRESHOLD};
pub use norm::NormStats;
pub use splits::{build_splits, Splits};
pub use store::{read_tensor, write_preview, write_tensor, Dataset, Manifest, SampleEntry};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Edge length of generator images.
pub const IMAGE_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("IPPT frequency undefined for Tc = {0} (need Tc > 140)")]
    FrequencyDomain(f64),
    #[error("cannot decode a constant image")]
    ConstantImage,
    #[error("normalization statistics degenerate for component {component}: min {min}, max {max}")]
    DegenerateStats { component: usize, min: f64, max: f64 },
    #[error("invalid split ratios {0:?}")]
    Ratios([f64; 3]),
    #[error("no samples")]
    Empty,
    #[error("malformed tensor file: {0}")]
    Format(String),
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("preview image: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

/// One simulated and homogenized structure, before splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSample {
    pub id: usize,
    /// 64×64 binary raster, 1 = crystal.
    pub cells: Array2<u8>,
    pub tc: f64,
    pub seed: u64,
    /// `(D1111, D2222, D1212)` in MPa.
    pub raw_condition: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Provenance {
    pub base_id: usize,
    pub seed: u64,
    pub augmentation: Augmentation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// Channel-first `(2, 64, 64)`: microstructure, IPPT.
    pub image: Array3<f32>,
    pub condition: [f64; 3],
    pub raw_condition: [f64; 3],
    pub tc: f64,
    pub provenance: Provenance,
}

impl TrainingSample {
    /// Unaugmented sample from a base record.
    pub fn from_base(base: &BaseSample, stats: &NormStats) -> Result<Self> {
        let (h, w) = base.cells.dim();
        if h != IMAGE_SIZE || w != IMAGE_SIZE {
            return Err(DatasetError::Shape(format!("expected {IMAGE_SIZE}x{IMAGE_SIZE} raster, got {h}x{w}")));
        }
        let ippt = make_ippt(base.tc)?;
        let mut image = Array3::<f32>::zeros((2, IMAGE_SIZE, IMAGE_SIZE));
        for ((r, c), &v) in base.cells.indexed_iter() {
            image[[0, r, c]] = if v != 0 { 1.0 } else { 0.0 };
            image[[1, r, c]] = ippt.pixels[[r, c]] as f32;
        }
        Ok(Self {
            image,
            condition: stats.normalize(base.raw_condition),
            raw_condition: base.raw_condition,
            tc: base.tc,
            provenance: Provenance { base_id: base.id, seed: base.seed, augmentation: Augmentation::Identity },
        })
    }

    pub fn id(&self) -> String {
        format!("{:06}-{}", self.provenance.base_id, self.provenance.augmentation.tag())
    }

    pub fn crystal_fraction(&self) -> f64 {
        let ch = self.image.index_axis(ndarray::Axis(0), 0);
        ch.iter().map(|&v| v as f64).sum::<f64>() / ch.len() as f64
    }
}
