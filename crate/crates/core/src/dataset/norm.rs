use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};

/// Per-component min/max of the raw conditions (MPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl NormStats {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let s = Self { min, max };
        s.validate()?;
        Ok(s)
    }

    pub fn from_conditions<'a>(raw: impl IntoIterator<Item = &'a [f64; 3]>) -> Result<Self> {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for v in raw {
            any = true;
            for k in 0..3 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        if !any {
            return Err(DatasetError::Empty);
        }
        Self::new(min, max)
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..3 {
            if !(self.max[k] > self.min[k]) || !self.min[k].is_finite() || !self.max[k].is_finite() {
                return Err(DatasetError::DegenerateStats { component: k, min: self.min[k], max: self.max[k] });
            }
        }
        Ok(())
    }

    /// Map into `[0, 1]`; values outside the training range are clamped
    /// with a warning.
    pub fn normalize(&self, raw: [f64; 3]) -> [f64; 3] {
        let (v, clamped) = self.normalize_checked(raw);
        if clamped {
            log::warn!("condition {raw:?} outside training range {:?}..{:?}; clamped", self.min, self.max);
        }
        v
    }

    /// Like [`normalize`](Self::normalize), also reporting whether clamping occurred.
    pub fn normalize_checked(&self, raw: [f64; 3]) -> ([f64; 3], bool) {
        let mut clamped = false;
        let v = std::array::from_fn(|k| {
            let x = (raw[k] - self.min[k]) / (self.max[k] - self.min[k]);
            if !(0.0..=1.0).contains(&x) {
                clamped = true;
            }
            x.clamp(0.0, 1.0)
        });
        (v, clamped)
    }

    pub fn denormalize(&self, v: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| self.min[k] + v[k] * (self.max[k] - self.min[k]))
    }
}
