use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Summary;
use super::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    /// Per generated image: mean squared pixel distance to the closest training image.
    pub distances: Vec<f64>,
    /// Index of that training image.
    pub nearest: Vec<usize>,
    pub summary: Option<Summary>,
}

pub fn mean_squared_distance(a: ArrayView2<f32>, b: ArrayView2<f32>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>() / a.len() as f64
}

/// Nearest-training-image novelty report over single-channel images.
pub fn report_neighbors(generated: &[ArrayView2<f32>], training: &[ArrayView2<f32>]) -> Result<NeighborReport> {
    if training.is_empty() && !generated.is_empty() {
        return Err(PipelineError::Shape("no training images to compare against".into()));
    }
    for img in generated.iter().chain(training) {
        if img.dim() != generated.first().or(training.first()).unwrap().dim() {
            return Err(PipelineError::Shape("image shapes differ".into()));
        }
    }
    let best: Vec<(usize, f64)> = generated
        .par_iter()
        .map(|g| {
            training
                .iter()
                .enumerate()
                .map(|(k, t)| (k, mean_squared_distance(*g, *t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("training non-empty")
        })
        .collect();
    let distances: Vec<f64> = best.iter().map(|b| b.1).collect();
    Ok(NeighborReport { summary: Summary::of(&distances), nearest: best.iter().map(|b| b.0).collect(), distances })
}
