use candle_core::{Device, Tensor};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::net::NoisePredictor;
use super::schedule::NoiseSchedule;
use super::{DiffusionError, Result};
use crate::seed::derive_seed;

const SAMPLE_KEY: u64 = 0x7361_6d70_6c69_6e67;

/// Ancestral sampling in diffusion space (`[−1, 1]` nominal range).
///
/// Item `i` of the batch draws all of its noise from a stream keyed by
/// `(seed, i)`, so a sample does not depend on what else is in the batch.
/// Returns `B·C·H·W` values, batch-major.
pub fn p_sample_loop_raw(
    model: &dyn NoisePredictor,
    schedule: &NoiseSchedule,
    shape: (usize, usize, usize),
    conditions: &[[f64; 3]],
    seed: u64,
) -> Result<Vec<f32>> {
    let b = conditions.len();
    if b == 0 {
        return Err(DiffusionError::Shape("no conditions".into()));
    }
    let (c, h, w) = shape;
    let per = c * h * w;
    let mut rngs: Vec<ChaCha8Rng> =
        (0..b).map(|i| ChaCha8Rng::seed_from_u64(derive_seed(seed, SAMPLE_KEY, i as u64))).collect();
    let mut x: Vec<f32> = rngs.iter_mut().flat_map(|r| (0..per).map(|_| r.sample::<f32, _>(StandardNormal)).collect::<Vec<_>>()).collect();
    for t in (1..=schedule.timesteps()).rev() {
        let xt = Tensor::from_vec(x.clone(), (b, c, h, w), &Device::Cpu)?;
        let eps = model.predict(&xt, &vec![t; b], conditions)?.flatten_all()?.to_vec1::<f32>()?;
        let (alpha, beta, ab) = (schedule.alpha(t), schedule.beta(t), schedule.alpha_bar(t));
        let inv_sqrt_alpha = (1.0 / alpha.sqrt()) as f32;
        let coef = (beta / (1.0 - ab).sqrt()) as f32;
        let sigma = beta.sqrt() as f32;
        for (i, rng) in rngs.iter_mut().enumerate() {
            for k in i * per..(i + 1) * per {
                let mean = inv_sqrt_alpha * (x[k] - coef * eps[k]);
                x[k] = if t > 1 { mean + sigma * rng.sample::<f32, _>(StandardNormal) } else { mean };
            }
        }
    }
    Ok(x)
}

/// Ancestral sampling mapped back to `[0, 1]` (clamped), one image per condition.
pub fn p_sample_loop(
    model: &dyn NoisePredictor,
    schedule: &NoiseSchedule,
    shape: (usize, usize, usize),
    conditions: &[[f64; 3]],
    seed: u64,
) -> Result<Vec<Array3<f32>>> {
    let raw = p_sample_loop_raw(model, schedule, shape, conditions, seed)?;
    let per = shape.0 * shape.1 * shape.2;
    Ok(raw
        .chunks_exact(per)
        .map(|chunk| {
            let v = chunk.iter().map(|x| ((x + 1.0) / 2.0).clamp(0.0, 1.0)).collect();
            Array3::from_shape_vec(shape, v).expect("chunk matches shape")
        })
        .collect())
}
