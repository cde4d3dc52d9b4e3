//! Versioned binary checkpoint: magic, format version, JSON metadata, then
//! little-endian f32 tensors in the order listed by the metadata.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use candle_core::{Device, Tensor};
use serde::{Deserialize, Serialize};

use super::net::{UNet, UNetConfig};
use super::schedule::{NoiseSchedule, ScheduleConfig};
use super::train::{Adam, TrainConfig, Trainer};
use super::{DiffusionError, Result};
use crate::dataset::NormStats;

const MAGIC: &[u8; 8] = b"MGCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub unet: UNetConfig,
    pub schedule: ScheduleConfig,
    pub train: TrainConfig,
    pub step: u64,
    pub adam_step: u64,
    pub losses: Vec<f32>,
    /// `(channels, height, width)` of the training images.
    pub image_shape: [usize; 3],
    pub norm_stats: Option<NormStats>,
    /// Candidate temperatures of the IPPT channel.
    pub temperatures: Vec<f64>,
    pub embedding: String,
    pub tensors: Vec<TensorRecord>,
}

/// Everything needed to resume training or to sample.
pub struct Checkpoint {
    pub trainer: Trainer,
    pub image_shape: [usize; 3],
    pub norm_stats: Option<NormStats>,
    pub temperatures: Vec<f64>,
}

fn named_tensors(trainer: &Trainer) -> Vec<(String, Tensor)> {
    let params = trainer.net.params().entries();
    let mut out: Vec<(String, Tensor)> = params.iter().map(|(n, v)| (format!("param/{n}"), v.as_tensor().clone())).collect();
    for (k, (n, _)) in params.iter().enumerate() {
        out.push((format!("adam_m/{n}"), trainer.adam.m[k].clone()));
        out.push((format!("adam_v/{n}"), trainer.adam.v[k].clone()));
    }
    out
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let tensors = named_tensors(&self.trainer);
        let meta = CheckpointMeta {
            version: CHECKPOINT_VERSION,
            unet: self.trainer.net.config.clone(),
            schedule: self.trainer.schedule.config,
            train: self.trainer.config.clone(),
            step: self.trainer.step,
            adam_step: self.trainer.adam.step,
            losses: self.trainer.losses.clone(),
            image_shape: self.image_shape,
            norm_stats: self.norm_stats,
            temperatures: self.temperatures.clone(),
            embedding: "sinusoidal-256 + tiled-condition-256".into(),
            tensors: tensors.iter().map(|(n, t)| TensorRecord { name: n.clone(), shape: t.dims().to_vec() }).collect(),
        };
        let json = serde_json::to_vec(&meta)?;
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for (_, t) in &tensors {
            for v in t.flatten_all()?.to_vec1::<f32>()? {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(DiffusionError::Checkpoint("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CHECKPOINT_VERSION {
            return Err(DiffusionError::Checkpoint(format!("unsupported version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let mut json = vec![0u8; u64::from_le_bytes(b8) as usize];
        r.read_exact(&mut json)?;
        let meta: CheckpointMeta = serde_json::from_slice(&json)?;

        let net = UNet::new(meta.unet.clone())?;
        let schedule = NoiseSchedule::new(meta.schedule)?;
        let mut trainer = Trainer::new(net, schedule, meta.train.clone())?;
        let expected = named_tensors(&trainer);
        if expected.len() != meta.tensors.len() {
            return Err(DiffusionError::Checkpoint(format!(
                "expected {} tensors, file lists {}",
                expected.len(),
                meta.tensors.len()
            )));
        }
        let mut loaded = Vec::with_capacity(expected.len());
        for ((name, t), rec) in expected.iter().zip(&meta.tensors) {
            if name != &rec.name || t.dims() != rec.shape.as_slice() {
                return Err(DiffusionError::Checkpoint(format!("tensor mismatch at {}: {:?}", rec.name, rec.shape)));
            }
            let n: usize = rec.shape.iter().product();
            let mut bytes = vec![0u8; 4 * n];
            r.read_exact(&mut bytes)?;
            let data: Vec<f32> = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
            loaded.push(Tensor::from_vec(data, rec.shape.as_slice(), &Device::Cpu)?);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(DiffusionError::Checkpoint(format!("{} trailing bytes", rest.len())));
        }

        let vars = trainer.net.params().vars();
        let np = vars.len();
        let mut it = loaded.into_iter();
        for var in &vars {
            var.set(&it.next().expect("count checked"))?;
        }
        let mut m = Vec::with_capacity(np);
        let mut v = Vec::with_capacity(np);
        for _ in 0..np {
            m.push(it.next().expect("count checked"));
            v.push(it.next().expect("count checked"));
        }
        trainer.adam = Adam { m, v, step: meta.adam_step, ..Adam::new(&[], &meta.train)? };
        trainer.step = meta.step;
        trainer.losses = meta.losses;
        Ok(Self { trainer, image_shape: meta.image_shape, norm_stats: meta.norm_stats, temperatures: meta.temperatures })
    }
}
