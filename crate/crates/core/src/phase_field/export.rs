use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Microstructure, Result};

/// Sidecar record written next to every exported microstructure PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrostructureMeta {
    pub tc: f64,
    pub seed: u64,
    pub grid: [usize; 2],
    pub steps: u64,
    pub crystal_fraction: f64,
}

fn sidecar(png: &Path) -> PathBuf {
    png.with_extension("json")
}

/// Write `<path>` as 8-bit grayscale (0 amorphous, 255 crystal) and
/// `<path>.json` with the metadata record.
pub fn write_microstructure(path: &Path, m: &Microstructure, steps: u64) -> Result<MicrostructureMeta> {
    let (rows, cols) = m.dim();
    let img = GrayImage::from_fn(cols as u32, rows as u32, |x, y| {
        image::Luma([m.cells()[[y as usize, x as usize]] * 255])
    });
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    img.save(path)?;
    let meta = MicrostructureMeta {
        tc: m.tc(),
        seed: m.seed(),
        grid: [rows, cols],
        steps,
        crystal_fraction: m.crystal_fraction(),
    };
    fs::write(sidecar(path), serde_json::to_vec_pretty(&meta)?)?;
    Ok(meta)
}

/// Read a PNG raster (pixels >= 128 are crystal) and its sidecar when present.
pub fn read_microstructure(path: &Path) -> Result<(Microstructure, Option<MicrostructureMeta>)> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    let cells = Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
        u8::from(img.get_pixel(c as u32, r as u32)[0] >= 128)
    });
    let meta_path = sidecar(path);
    let meta: Option<MicrostructureMeta> = if meta_path.exists() {
        Some(serde_json::from_slice(&fs::read(meta_path)?)?)
    } else {
        None
    };
    let (tc, seed) = meta.as_ref().map_or((f64::NAN, 0), |m| (m.tc, m.seed));
    Ok((Microstructure::from_cells(cells, tc, seed), meta))
}
