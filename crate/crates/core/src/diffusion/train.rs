use candle_core::backprop::GradStore;
use candle_core::{Device, Tensor, Var};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::net::{NoisePredictor, UNet};
use super::schedule::NoiseSchedule;
use super::{DiffusionError, Result};
use crate::seed::derive_seed;

const TRAIN_KEY: u64 = 0x7472_6169_6e69_6e67;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub steps: u64,
    pub seed: u64,
    pub log_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, batch_size: 16, steps: 1000, seed: 0, log_every: 100 }
    }
}

/// Adam with bias correction; moments are kept per parameter in creation order.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Adam {
    pub fn new(vars: &[Var], cfg: &TrainConfig) -> Result<Self> {
        let zeros = |v: &Var| v.zeros_like();
        Ok(Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            step: 0,
            m: vars.iter().map(zeros).collect::<candle_core::Result<_>>()?,
            v: vars.iter().map(zeros).collect::<candle_core::Result<_>>()?,
        })
    }

    pub fn update(&mut self, vars: &[Var], grads: &GradStore) -> Result<()> {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (k, var) in vars.iter().enumerate() {
            let Some(g) = grads.get(var) else { continue };
            let g = g.detach();
            self.m[k] = ((&self.m[k] * self.beta1)? + (&g * (1.0 - self.beta1))?)?.detach();
            self.v[k] = ((&self.v[k] * self.beta2)? + (g.sqr()? * (1.0 - self.beta2))?)?.detach();
            let mhat = (&self.m[k] / c1)?;
            let vhat = (&self.v[k] / c2)?;
            let delta = (mhat / (vhat.sqrt()? + self.eps)?)?;
            var.set(&(var.as_tensor().detach() - (delta * self.lr)?)?)?;
        }
        Ok(())
    }
}

/// A training pair: image in `[0, 1]` (channel-first) and its normalized condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub image: Array3<f32>,
    pub condition: [f64; 3],
}

pub struct Trainer {
    pub net: UNet,
    pub schedule: NoiseSchedule,
    pub config: TrainConfig,
    pub adam: Adam,
    pub step: u64,
    pub losses: Vec<f32>,
}

impl Trainer {
    pub fn new(net: UNet, schedule: NoiseSchedule, config: TrainConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return Err(DiffusionError::Config("batch_size must be positive".into()));
        }
        let adam = Adam::new(&net.params().vars(), &config)?;
        Ok(Self { net, schedule, config, adam, step: 0, losses: Vec::new() })
    }

    /// One update on an explicit batch. Images are mapped to `[−1, 1]`;
    /// timesteps and noise are drawn from a stream keyed by the step index.
    pub fn train_step(&mut self, batch: &[&Example]) -> Result<f32> {
        let first = batch.first().ok_or_else(|| DiffusionError::Shape("empty batch".into()))?;
        let (c, h, w) = first.image.dim();
        let per = c * h * w;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, TRAIN_KEY, self.step));
        let t_max = self.schedule.timesteps();
        let mut xt = Vec::with_capacity(batch.len() * per);
        let mut noise_all = Vec::with_capacity(batch.len() * per);
        let mut ts = Vec::with_capacity(batch.len());
        let mut conds = Vec::with_capacity(batch.len());
        for ex in batch {
            if ex.image.dim() != (c, h, w) {
                return Err(DiffusionError::Shape("batch images differ in shape".into()));
            }
            let t = rng.random_range(1..=t_max);
            let x0: Vec<f32> = ex.image.iter().map(|v| 2.0 * v - 1.0).collect();
            let noise: Vec<f32> = (0..per).map(|_| rng.sample(StandardNormal)).collect();
            xt.extend(self.schedule.q_sample(&x0, t, &noise));
            noise_all.extend(noise);
            ts.push(t);
            conds.push(ex.condition);
        }
        let shape = (batch.len(), c, h, w);
        let x = Tensor::from_vec(xt, shape, &Device::Cpu)?;
        let target = Tensor::from_vec(noise_all, shape, &Device::Cpu)?;
        let pred = self.net.predict(&x, &ts, &conds)?;
        let loss = (pred - target)?.sqr()?.mean_all()?;
        let value = loss.to_scalar::<f32>()?;
        if !value.is_finite() {
            return Err(DiffusionError::NonFiniteLoss { step: self.step, loss: value });
        }
        let grads = loss.backward()?;
        self.adam.update(&self.net.params().vars(), &grads)?;
        self.step += 1;
        self.losses.push(value);
        Ok(value)
    }

    /// Minibatch indices for the current step (uniform with replacement).
    pub fn batch_indices(&self, n: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, TRAIN_KEY ^ 1, self.step));
        (0..self.config.batch_size).map(|_| rng.random_range(0..n)).collect()
    }

    /// Run until `config.steps` total updates have been made.
    pub fn fit(&mut self, data: &[Example]) -> Result<()> {
        if data.is_empty() {
            return Err(DiffusionError::Shape("no training examples".into()));
        }
        while self.step < self.config.steps {
            let idx = self.batch_indices(data.len());
            let batch: Vec<&Example> = idx.iter().map(|&i| &data[i]).collect();
            let loss = self.train_step(&batch)?;
            if self.config.log_every > 0 && self.step % self.config.log_every == 0 {
                log::info!("step {} loss {loss:.5}", self.step);
            }
        }
        Ok(())
    }
}
