use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use microgen_core::diffusion::{ScheduleConfig, TrainConfig, UNetConfig};
use microgen_core::{HomogenizationConfig, PhaseMaterials};

/// Read a TOML or JSON config (by extension); no file means all defaults.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display())),
        Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())),
        _ => bail!("config {} must end in .toml or .json", path.display()),
    }
}

/// Flag value first, then config value, otherwise an error naming the flag.
pub fn pick(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| config.clone()).with_context(|| format!("no {name} path given (flag or config)"))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataFile {
    #[serde(flatten)]
    pub generation: microgen_core::pipeline::GenDataConfig,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HomogenizeFile {
    pub materials: PhaseMaterials,
    pub homogenization: HomogenizationConfig,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainFile {
    pub unet: UNetConfig,
    pub schedule: ScheduleConfig,
    pub train: TrainConfig,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleFile {
    /// Raw `(D1111, D2222, D1212)` conditions in MPa.
    pub conditions: Vec<[f64; 3]>,
    pub n_per_condition: Option<usize>,
    pub batch_size: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateFile {
    #[serde(flatten)]
    pub validation: microgen_core::pipeline::ValidateConfig,
    /// Which split supplies the conditions: `test` (default), `val` or `train`.
    pub split: Option<String>,
    /// Upper bound on the number of distinct conditions drawn from the split.
    pub max_conditions: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoFile {
    #[serde(flatten)]
    pub validation: microgen_core::pipeline::ValidateConfig,
    pub e_target: Option<f64>,
    pub nu_target: Option<f64>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NeighborsFile {
    pub generated: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}
