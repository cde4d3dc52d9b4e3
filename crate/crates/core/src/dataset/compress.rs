use ndarray::Array2;

use super::{DatasetError, Result};

/// Mean pooling over non-overlapping 5×5 blocks, then binarization.
pub fn compress(field: &Array2<f64>) -> Result<Array2<u8>> {
    pool_binarize(field, 5)
}

/// Mean pooling over `factor × factor` blocks; a block mean of at least 0.5
/// becomes 1.
pub fn pool_binarize(field: &Array2<f64>, factor: usize) -> Result<Array2<u8>> {
    let (h, w) = field.dim();
    if factor == 0 || h % factor != 0 || w % factor != 0 || h == 0 || w == 0 {
        return Err(DatasetError::Shape(format!("{h}x{w} is not divisible into {factor}x{factor} blocks")));
    }
    let area = (factor * factor) as f64;
    Ok(Array2::from_shape_fn((h / factor, w / factor), |(r, c)| {
        let block = field.slice(ndarray::s![r * factor..(r + 1) * factor, c * factor..(c + 1) * factor]);
        // Compare the sum against half the block area to avoid rounding in the mean.
        u8::from(2.0 * block.sum() >= area)
    }))
}
