//! On-disk dataset layout: `manifest.json`, `samples/<id>.bin` tensors and
//! optional `previews/<id>.png`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array3, ArrayD, IxDyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{augment, build_splits, BaseSample, DatasetError, NormStats, Provenance, Result, Splits, TrainingSample};

const TENSOR_MAGIC: &[u8; 4] = b"MGTN";
const TENSOR_VERSION: u32 = 1;
const MANIFEST_VERSION: u32 = 1;

/// Write a little-endian f32 tensor with a shape header.
pub fn write_tensor(path: &Path, shape: &[usize], data: &[f32]) -> Result<()> {
    if shape.iter().product::<usize>() != data.len() {
        return Err(DatasetError::Shape(format!("shape {shape:?} does not hold {} values", data.len())));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&TENSOR_VERSION.to_le_bytes())?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<ArrayD<f32>> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(DatasetError::Format(format!("{}: bad magic", path.display())));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != TENSOR_VERSION {
        return Err(DatasetError::Format(format!("{}: unsupported version {version}", path.display())));
    }
    r.read_exact(&mut u32buf)?;
    let ndim = u32::from_le_bytes(u32buf) as usize;
    let mut shape = Vec::with_capacity(ndim);
    let mut u64buf = [0u8; 8];
    for _ in 0..ndim {
        r.read_exact(&mut u64buf)?;
        shape.push(u64::from_le_bytes(u64buf) as usize);
    }
    let n: usize = shape.iter().product();
    let mut bytes = Vec::with_capacity(4 * n);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 4 * n {
        return Err(DatasetError::Format(format!("{}: expected {n} values, found {} bytes", path.display(), bytes.len())));
    }
    let data = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
    ArrayD::from_shape_vec(IxDyn(&shape), data).map_err(|e| DatasetError::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    pub file: String,
    pub tc: f64,
    pub condition: [f64; 3],
    pub raw_condition: [f64; 3],
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub norm_stats: NormStats,
    pub temperatures: Vec<f64>,
    pub base_splits: Splits,
    pub train: Vec<SampleEntry>,
    pub val: Vec<SampleEntry>,
    pub test: Vec<SampleEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub norm_stats: NormStats,
    pub splits: Splits,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub temperatures: Vec<f64>,
    pub train: Vec<TrainingSample>,
    pub val: Vec<TrainingSample>,
    pub test: Vec<TrainingSample>,
}

impl Dataset {
    /// Split base samples, fit normalization on the training split, and
    /// augment the training split ×4.
    pub fn build(base: &[BaseSample], ratios: [f64; 3], seed: u64) -> Result<Self> {
        if base.is_empty() {
            return Err(DatasetError::Empty);
        }
        let ids: Vec<usize> = base.iter().map(|b| b.id).collect();
        let splits = build_splits(&ids, ratios, seed)?;
        let by_id = |id: usize| base.iter().find(|b| b.id == id).expect("split ids come from base");
        let norm_stats = NormStats::from_conditions(splits.train.iter().map(|&id| &by_id(id).raw_condition))?;
        let make = |ids: &[usize], aug: bool| -> Result<Vec<TrainingSample>> {
            let per: Vec<Vec<TrainingSample>> = ids
                .par_iter()
                .map(|&id| {
                    let s = TrainingSample::from_base(by_id(id), &norm_stats)?;
                    Ok(if aug { augment(&s).to_vec() } else { vec![s] })
                })
                .collect::<Result<_>>()?;
            Ok(per.into_iter().flatten().collect())
        };
        let mut temperatures: Vec<f64> = base.iter().map(|b| b.tc).collect();
        temperatures.sort_by(f64::total_cmp);
        temperatures.dedup();
        Ok(Self {
            train: make(&splits.train, true)?,
            val: make(&splits.val, false)?,
            test: make(&splits.test, false)?,
            norm_stats,
            splits,
            seed,
            ratios,
            temperatures,
        })
    }

    pub fn manifest(&self) -> Manifest {
        let entries = |v: &[TrainingSample]| {
            v.iter()
                .map(|s| SampleEntry {
                    id: s.id(),
                    file: format!("samples/{}.bin", s.id()),
                    tc: s.tc,
                    condition: s.condition,
                    raw_condition: s.raw_condition,
                    provenance: s.provenance.clone(),
                })
                .collect()
        };
        Manifest {
            version: MANIFEST_VERSION,
            seed: self.seed,
            ratios: self.ratios,
            norm_stats: self.norm_stats,
            temperatures: self.temperatures.clone(),
            base_splits: self.splits.clone(),
            train: entries(&self.train),
            val: entries(&self.val),
            test: entries(&self.test),
        }
    }

    pub fn write(&self, dir: &Path, previews: bool) -> Result<()> {
        fs::create_dir_all(dir.join("samples"))?;
        if previews {
            fs::create_dir_all(dir.join("previews"))?;
        }
        let all: Vec<&TrainingSample> = self.train.iter().chain(&self.val).chain(&self.test).collect();
        all.par_iter().try_for_each(|s| -> Result<()> {
            let shape = s.image.shape().to_vec();
            let data: Vec<f32> = s.image.iter().copied().collect();
            write_tensor(&dir.join(format!("samples/{}.bin", s.id())), &shape, &data)?;
            if previews {
                write_preview(&dir.join(format!("previews/{}.png", s.id())), &s.image)?;
            }
            Ok(())
        })?;
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest())?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(DatasetError::Format(format!("unsupported manifest version {}", manifest.version)));
        }
        manifest.norm_stats.validate()?;
        let load = |entries: &[SampleEntry]| -> Result<Vec<TrainingSample>> {
            entries
                .par_iter()
                .map(|e| {
                    let t = read_tensor(&dir.join(&e.file))?;
                    let image = t
                        .into_dimensionality::<ndarray::Ix3>()
                        .map_err(|err| DatasetError::Format(format!("{}: {err}", e.file)))?;
                    Ok(TrainingSample {
                        image,
                        condition: e.condition,
                        raw_condition: e.raw_condition,
                        tc: e.tc,
                        provenance: e.provenance.clone(),
                    })
                })
                .collect()
        };
        Ok(Self {
            train: load(&manifest.train)?,
            val: load(&manifest.val)?,
            test: load(&manifest.test)?,
            norm_stats: manifest.norm_stats,
            splits: manifest.base_splits,
            seed: manifest.seed,
            ratios: manifest.ratios,
            temperatures: manifest.temperatures,
        })
    }
}

/// Both channels side by side as 8-bit grayscale.
pub fn write_preview(path: &Path, image: &Array3<f32>) -> Result<()> {
    let (c, h, w) = image.dim();
    let mut img = image::GrayImage::new((c * w) as u32, h as u32);
    for ((k, r, col), &v) in image.indexed_iter() {
        let px = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        img.put_pixel((k * w + col) as u32, r as u32, image::Luma([px]));
    }
    img.save(path)?;
    Ok(())
}
