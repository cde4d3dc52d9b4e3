use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{DatasetError, Result, IMAGE_SIZE};

/// Best correlation below which a decode is flagged as unreliable.
pub const CONFIDENCE_THRESHOLD: f64 = 0.5;

/// Stripe frequency (cycles per pixel column) encoding `tc`.
pub fn ippt_frequency(tc: f64) -> Result<f64> {
    if !(tc > 140.0) || !tc.is_finite() {
        return Err(DatasetError::FrequencyDomain(tc));
    }
    Ok(2.0 / (tc - 140.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpptImage {
    pub pixels: Array2<f64>,
    pub tc: f64,
}

fn profile(f: f64, mirrored: bool) -> Array1<f64> {
    Array1::from_shape_fn(IMAGE_SIZE, |x| {
        let x = if mirrored { (IMAGE_SIZE - 1 - x) as f64 } else { x as f64 };
        0.5 + 0.5 * (2.0 * PI * f * x).sin()
    })
}

pub fn make_ippt(tc: f64) -> Result<IpptImage> {
    let row = profile(ippt_frequency(tc)?, false);
    let pixels = Array2::from_shape_fn((IMAGE_SIZE, IMAGE_SIZE), |(_, c)| row[c]);
    Ok(IpptImage { pixels, tc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpptDecode {
    pub tc: f64,
    /// Pearson correlation of the column profile with the winning template.
    pub score: f64,
    pub low_confidence: bool,
}

fn pearson(a: &Array1<f64>, b: &Array1<f64>) -> Option<f64> {
    let (ma, mb) = (a.mean()?, b.mean()?);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Matched-filter decode over a candidate temperature list.
///
/// Each candidate is tested in both column orientations, since a 180°
/// rotation of a training image reverses the stripe pattern.
pub fn decode_ippt(img: &Array2<f64>, candidates: &[f64]) -> Result<IpptDecode> {
    let (h, w) = img.dim();
    if w != IMAGE_SIZE || h == 0 {
        return Err(DatasetError::Shape(format!("expected {IMAGE_SIZE} columns, got {h}x{w}")));
    }
    if candidates.is_empty() {
        return Err(DatasetError::Empty);
    }
    let columns = img.mean_axis(Axis(0)).expect("non-empty image");
    let (lo, hi) = columns.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi - lo > 1e-9) {
        return Err(DatasetError::ConstantImage);
    }
    let mut best: Option<(f64, f64)> = None;
    for &tc in candidates {
        let f = ippt_frequency(tc)?;
        for mirrored in [false, true] {
            let score = pearson(&columns, &profile(f, mirrored)).ok_or(DatasetError::ConstantImage)?;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((tc, score));
            }
        }
    }
    let (tc, score) = best.expect("candidates checked non-empty");
    Ok(IpptDecode { tc, score, low_confidence: score < CONFIDENCE_THRESHOLD })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const CANDIDATES: [f64; 3] = [160.0, 180.0, 200.0];

    #[test]
    fn frequencies_and_periods() {
        assert!((ippt_frequency(160.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((ippt_frequency(200.0).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        let img = make_ippt(160.0).unwrap();
        for c in 0..54 {
            assert!((img.pixels[[3, c]] - img.pixels[[3, c + 10]]).abs() < 1e-12);
        }
        assert_eq!(make_ippt(200.0).unwrap().pixels[[0, 0]], 0.5);
        assert!(matches!(make_ippt(140.0), Err(DatasetError::FrequencyDomain(_))));
    }

    #[test]
    fn rows_are_identical() {
        let img = make_ippt(180.0).unwrap();
        for r in 1..IMAGE_SIZE {
            assert_eq!(img.pixels.row(r), img.pixels.row(0));
        }
        assert!(img.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn clean_round_trip() {
        for tc in CANDIDATES {
            let d = decode_ippt(&make_ippt(tc).unwrap().pixels, &CANDIDATES).unwrap();
            assert_eq!(d.tc, tc);
            assert!(d.score >= 0.99);
            assert!(!d.low_confidence);
        }
    }

    #[test]
    fn mirrored_pattern_decodes() {
        for tc in CANDIDATES {
            let img = make_ippt(tc).unwrap().pixels;
            let flipped = Array2::from_shape_fn(img.dim(), |(r, c)| img[[r, IMAGE_SIZE - 1 - c]]);
            assert_eq!(decode_ippt(&flipped, &CANDIDATES).unwrap().tc, tc);
        }
    }

    #[test]
    fn noise_is_low_confidence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.5, 0.2).unwrap();
        let mut flagged = 0;
        for _ in 0..100 {
            let img = Array2::from_shape_fn((IMAGE_SIZE, IMAGE_SIZE), |_| normal.sample(&mut rng));
            flagged += decode_ippt(&img, &CANDIDATES).unwrap().low_confidence as usize;
        }
        assert_eq!(flagged, 100);
    }

    #[test]
    fn constant_image_is_an_error() {
        let img = Array2::from_elem((IMAGE_SIZE, IMAGE_SIZE), 0.3);
        assert!(matches!(decode_ippt(&img, &CANDIDATES), Err(DatasetError::ConstantImage)));
    }
}
