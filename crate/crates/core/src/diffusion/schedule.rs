use serde::{Deserialize, Serialize};

use super::{DiffusionError, Result};

/// Parameters of a linear variance schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { timesteps: 1000, beta_start: 1e-4, beta_end: 0.02 }
    }
}

/// Variance schedule; index `t − 1` holds the values for timestep `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub config: ScheduleConfig,
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(config: ScheduleConfig) -> Result<Self> {
        let ScheduleConfig { timesteps, beta_start, beta_end } = config;
        if timesteps == 0 {
            return Err(DiffusionError::Schedule("need at least one timestep".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(DiffusionError::Schedule(format!("need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")));
        }
        let betas: Vec<f64> = (0..timesteps)
            .map(|i| {
                let s = if timesteps == 1 { 0.0 } else { i as f64 / (timesteps - 1) as f64 };
                beta_start + s * (beta_end - beta_start)
            })
            .collect();
        Ok(Self::from_betas(config, betas))
    }

    /// Schedule from explicit betas (each in `[0, 1)`).
    pub fn from_betas(config: ScheduleConfig, betas: Vec<f64>) -> Self {
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Self { config: ScheduleConfig { timesteps: betas.len(), ..config }, betas, alphas, alpha_bars }
    }

    pub fn timesteps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t - 1]
    }

    /// Closed-form forward marginal `√ᾱ_t·x0 + √(1−ᾱ_t)·noise`.
    pub fn q_sample(&self, x0: &[f32], t: usize, noise: &[f32]) -> Vec<f32> {
        assert_eq!(x0.len(), noise.len());
        let ab = self.alpha_bar(t);
        let (a, b) = (ab.sqrt() as f32, (1.0 - ab).sqrt() as f32);
        x0.iter().zip(noise).map(|(x, n)| a * x + b * n).collect()
    }

    /// One forward chain step `x_t = √α_t·x_{t−1} + √β_t·noise`.
    pub fn q_step(&self, x_prev: &[f32], t: usize, noise: &[f32]) -> Vec<f32> {
        let (a, b) = (self.alpha(t).sqrt() as f32, self.beta(t).sqrt() as f32);
        x_prev.iter().zip(noise).map(|(x, n)| a * x + b * n).collect()
    }
}
