use ndarray::{Array3, ArrayView3};
use serde::{Deserialize, Serialize};

use super::TrainingSample;

/// The four symmetry operations that leave the in-plane D diagonal unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    Identity,
    Rot180,
    /// Reflection about the x1 (horizontal) axis: rows reversed.
    FlipX1,
    FlipX1Rot180,
}

impl Augmentation {
    pub const ALL: [Augmentation; 4] =
        [Augmentation::Identity, Augmentation::Rot180, Augmentation::FlipX1, Augmentation::FlipX1Rot180];

    pub fn tag(self) -> &'static str {
        match self {
            Augmentation::Identity => "id",
            Augmentation::Rot180 => "rot180",
            Augmentation::FlipX1 => "flipx1",
            Augmentation::FlipX1Rot180 => "flipx1rot180",
        }
    }

    /// `(reverse rows, reverse columns)`.
    fn flips(self) -> (bool, bool) {
        match self {
            Augmentation::Identity => (false, false),
            Augmentation::Rot180 => (true, true),
            Augmentation::FlipX1 => (true, false),
            Augmentation::FlipX1Rot180 => (false, true),
        }
    }

    /// Group product: applying `self` after `other`.
    pub fn compose(self, other: Augmentation) -> Augmentation {
        let (a, b) = (self.flips(), other.flips());
        let flips = (a.0 ^ b.0, a.1 ^ b.1);
        *Self::ALL.iter().find(|g| g.flips() == flips).expect("closed under composition")
    }

    /// Apply to every channel of a `(C, H, W)` image.
    pub fn apply<T: Copy>(self, image: ArrayView3<T>) -> Array3<T> {
        let (rows, cols) = self.flips();
        let (_, h, w) = image.dim();
        Array3::from_shape_fn(image.dim(), |(k, r, c)| {
            image[[k, if rows { h - 1 - r } else { r }, if cols { w - 1 - c } else { c }]]
        })
    }
}

/// The four variants of a sample; conditions are copied unchanged.
pub fn augment(sample: &TrainingSample) -> [TrainingSample; 4] {
    Augmentation::ALL.map(|g| {
        let mut s = sample.clone();
        s.image = g.apply(sample.image.view());
        s.provenance.augmentation = g.compose(sample.provenance.augmentation);
        s
    })
}
