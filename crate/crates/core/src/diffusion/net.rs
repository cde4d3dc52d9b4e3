//! U-Net noise predictor.

use candle_core::{DType, Device, Module, Tensor, Var};
use candle_nn::GroupNorm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embedding::{joint_embedding, EMBED_DIM};
use super::{DiffusionError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UNetConfig {
    pub in_channels: usize,
    pub base_channels: usize,
    /// Channel multiplier per resolution level; each extra level halves the resolution.
    pub channel_mult: Vec<usize>,
    pub embed_hidden: usize,
    pub groups: usize,
    pub init_seed: u64,
}

impl Default for UNetConfig {
    fn default() -> Self {
        Self { in_channels: 2, base_channels: 32, channel_mult: vec![1, 2, 2], embed_hidden: 128, groups: 8, init_seed: 0 }
    }
}

impl UNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.base_channels == 0 || self.embed_hidden == 0 || self.groups == 0 {
            return Err(DiffusionError::Config("channel counts and groups must be positive".into()));
        }
        if self.channel_mult.is_empty() || self.channel_mult.contains(&0) {
            return Err(DiffusionError::Config("channel_mult must be non-empty and positive".into()));
        }
        Ok(())
    }

    /// Input edge lengths must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        1 << (self.channel_mult.len() - 1)
    }
}

/// Predicts the noise added to `x` at the given timesteps and conditions.
pub trait NoisePredictor {
    fn predict(&self, x: &Tensor, timesteps: &[usize], conditions: &[[f64; 3]]) -> Result<Tensor>;
}

/// Always predicts zero noise.
pub struct ZeroPredictor;

impl NoisePredictor for ZeroPredictor {
    fn predict(&self, x: &Tensor, _: &[usize], _: &[[f64; 3]]) -> Result<Tensor> {
        Ok(x.zeros_like()?)
    }
}

enum Init {
    Zeros,
    Ones,
    /// Uniform in `±1/√fan_in`.
    FanIn(usize),
}

/// Named trainable tensors in creation order.
#[derive(Default)]
pub struct ParamStore {
    entries: Vec<(String, Var)>,
}

impl ParamStore {
    fn add(&mut self, name: String, shape: &[usize], init: Init, rng: &mut ChaCha8Rng) -> Result<Var> {
        let n: usize = shape.iter().product();
        let data: Vec<f32> = match init {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::FanIn(fan_in) => {
                let bound = 1.0 / (fan_in as f32).sqrt();
                (0..n).map(|_| rng.random_range(-bound..bound)).collect()
            }
        };
        let var = Var::from_vec(data, shape, &Device::Cpu)?;
        self.entries.push((name, var.clone()));
        Ok(var)
    }

    pub fn entries(&self) -> &[(String, Var)] {
        &self.entries
    }

    pub fn vars(&self) -> Vec<Var> {
        self.entries.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.elem_count()).sum()
    }
}

struct Conv {
    w: Var,
    b: Var,
    stride: usize,
    pad: usize,
}

impl Conv {
    fn new(p: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, cin: usize, cout: usize, k: usize, stride: usize, zero: bool) -> Result<Self> {
        let fan_in = cin * k * k;
        let (wi, bi) = if zero { (Init::Zeros, Init::Zeros) } else { (Init::FanIn(fan_in), Init::FanIn(fan_in)) };
        Ok(Self {
            w: p.add(format!("{name}.weight"), &[cout, cin, k, k], wi, rng)?,
            b: p.add(format!("{name}.bias"), &[cout], bi, rng)?,
            stride,
            pad: k / 2,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv2d(&self.w, self.pad, self.stride, 1, 1)?;
        Ok(y.broadcast_add(&self.b.reshape((1, (), 1, 1))?)?)
    }
}

struct Linear {
    w: Var,
    b: Var,
}

impl Linear {
    fn new(p: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, din: usize, dout: usize) -> Result<Self> {
        Ok(Self {
            w: p.add(format!("{name}.weight"), &[dout, din], Init::FanIn(din), rng)?,
            b: p.add(format!("{name}.bias"), &[dout], Init::FanIn(din), rng)?,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.matmul(&self.w.t()?)?.broadcast_add(&self.b)?)
    }
}

struct Norm {
    w: Var,
    b: Var,
    channels: usize,
    groups: usize,
}

impl Norm {
    fn new(p: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, channels: usize, max_groups: usize) -> Result<Self> {
        let groups = (1..=max_groups.min(channels)).rev().find(|g| channels % g == 0).unwrap_or(1);
        Ok(Self {
            w: p.add(format!("{name}.weight"), &[channels], Init::Ones, rng)?,
            b: p.add(format!("{name}.bias"), &[channels], Init::Zeros, rng)?,
            channels,
            groups,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let gn = GroupNorm::new(self.w.as_tensor().clone(), self.b.as_tensor().clone(), self.channels, self.groups, 1e-5)?;
        Ok(gn.forward(x)?)
    }
}

struct ResBlock {
    norm1: Norm,
    conv1: Conv,
    emb: Linear,
    norm2: Norm,
    conv2: Conv,
    skip: Option<Conv>,
}

impl ResBlock {
    fn new(p: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, cin: usize, cout: usize, cfg: &UNetConfig) -> Result<Self> {
        Ok(Self {
            norm1: Norm::new(p, rng, &format!("{name}.norm1"), cin, cfg.groups)?,
            conv1: Conv::new(p, rng, &format!("{name}.conv1"), cin, cout, 3, 1, false)?,
            emb: Linear::new(p, rng, &format!("{name}.emb"), cfg.embed_hidden, cout)?,
            norm2: Norm::new(p, rng, &format!("{name}.norm2"), cout, cfg.groups)?,
            conv2: Conv::new(p, rng, &format!("{name}.conv2"), cout, cout, 3, 1, false)?,
            skip: if cin != cout { Some(Conv::new(p, rng, &format!("{name}.skip"), cin, cout, 1, 1, false)?) } else { None },
        })
    }

    fn forward(&self, x: &Tensor, emb: &Tensor) -> Result<Tensor> {
        let h = self.conv1.forward(&self.norm1.forward(x)?.silu()?)?;
        let e = self.emb.forward(&emb.silu()?)?.unsqueeze(2)?.unsqueeze(3)?;
        let h = h.broadcast_add(&e)?;
        let h = self.conv2.forward(&self.norm2.forward(&h)?.silu()?)?;
        let skip = match &self.skip {
            Some(c) => c.forward(x)?,
            None => x.clone(),
        };
        Ok((h + skip)?)
    }
}

pub struct UNet {
    pub config: UNetConfig,
    params: ParamStore,
    embed1: Linear,
    embed2: Linear,
    conv_in: Conv,
    down: Vec<(ResBlock, Option<Conv>)>,
    mid: ResBlock,
    up: Vec<(Option<Conv>, ResBlock)>,
    norm_out: Norm,
    conv_out: Conv,
}

impl UNet {
    /// Seeded construction; the final convolution starts at zero.
    pub fn new(config: UNetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut p = ParamStore::default();
        let r = &mut rng;
        let cfg = &config;
        let widths: Vec<usize> = cfg.channel_mult.iter().map(|m| m * cfg.base_channels).collect();
        let levels = widths.len();

        let embed1 = Linear::new(&mut p, r, "embed.0", EMBED_DIM, cfg.embed_hidden)?;
        let embed2 = Linear::new(&mut p, r, "embed.1", cfg.embed_hidden, cfg.embed_hidden)?;
        let conv_in = Conv::new(&mut p, r, "conv_in", cfg.in_channels, widths[0], 3, 1, false)?;
        let mut down = Vec::with_capacity(levels);
        let mut cur = widths[0];
        for (i, &w) in widths.iter().enumerate() {
            let block = ResBlock::new(&mut p, r, &format!("down.{i}.block"), cur, w, cfg)?;
            cur = w;
            let pool = if i + 1 < levels { Some(Conv::new(&mut p, r, &format!("down.{i}.pool"), w, w, 3, 2, false)?) } else { None };
            down.push((block, pool));
        }
        let mid = ResBlock::new(&mut p, r, "mid", cur, cur, cfg)?;
        let mut up = Vec::with_capacity(levels);
        for (i, &w) in widths.iter().enumerate().rev() {
            let upconv = if i + 1 < levels { Some(Conv::new(&mut p, r, &format!("up.{i}.upconv"), cur, cur, 3, 1, false)?) } else { None };
            let block = ResBlock::new(&mut p, r, &format!("up.{i}.block"), cur + w, w, cfg)?;
            cur = w;
            up.push((upconv, block));
        }
        let norm_out = Norm::new(&mut p, r, "norm_out", cur, cfg.groups)?;
        let conv_out = Conv::new(&mut p, r, "conv_out", cur, cfg.in_channels, 3, 1, true)?;
        Ok(Self { config, params: p, embed1, embed2, conv_in, down, mid, up, norm_out, conv_out })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// `x`: `(B, C, H, W)`; `emb`: `(B, 256)` joint embeddings.
    pub fn forward(&self, x: &Tensor, emb: &Tensor) -> Result<Tensor> {
        let (_, c, h, w) = x.dims4()?;
        let m = self.config.size_multiple();
        if c != self.config.in_channels || h % m != 0 || w % m != 0 {
            return Err(DiffusionError::Shape(format!(
                "input {:?} incompatible with {} channels and size multiple {m}",
                x.dims(),
                self.config.in_channels
            )));
        }
        let emb = self.embed2.forward(&self.embed1.forward(emb)?.silu()?)?;
        let mut h = self.conv_in.forward(x)?;
        let mut skips = Vec::with_capacity(self.down.len());
        for (block, pool) in &self.down {
            h = block.forward(&h, &emb)?;
            skips.push(h.clone());
            if let Some(pool) = pool {
                h = pool.forward(&h)?;
            }
        }
        h = self.mid.forward(&h, &emb)?;
        for (upconv, block) in &self.up {
            if let Some(upconv) = upconv {
                let (_, _, hh, ww) = h.dims4()?;
                h = upconv.forward(&h.upsample_nearest2d(2 * hh, 2 * ww)?)?;
            }
            let skip = skips.pop().expect("one skip per level");
            h = block.forward(&Tensor::cat(&[&h, &skip], 1)?, &emb)?;
        }
        self.conv_out.forward(&self.norm_out.forward(&h)?.silu()?)
    }
}

/// `(B, 256)` embedding tensor for a batch.
pub fn embedding_batch(timesteps: &[usize], conditions: &[[f64; 3]]) -> Result<Tensor> {
    if timesteps.len() != conditions.len() {
        return Err(DiffusionError::Shape(format!("{} timesteps for {} conditions", timesteps.len(), conditions.len())));
    }
    let data: Vec<f32> = timesteps.iter().zip(conditions).flat_map(|(&t, &c)| joint_embedding(t, c)).collect();
    Ok(Tensor::from_vec(data, (timesteps.len(), EMBED_DIM), &Device::Cpu)?)
}

impl NoisePredictor for UNet {
    fn predict(&self, x: &Tensor, timesteps: &[usize], conditions: &[[f64; 3]]) -> Result<Tensor> {
        let emb = embedding_batch(timesteps, conditions)?;
        self.forward(&x.to_dtype(DType::F32)?, &emb)
    }
}
