use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::{dmat_from_constants, DemoRequest};
use super::neighbors::mean_squared_distance;
use super::stats::{pearson, Summary};
use super::{PipelineError, Result};
use crate::dataset::decode_ippt;
use crate::diffusion::{p_sample_loop, Checkpoint};
use crate::homogenization::{effective_constants, homogenize_with, HomogenizationConfig, PhaseMaterials};
use crate::seed::derive_seed;

const VALIDATE_KEY: u64 = 0x7661_6c69_6461_7465;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateConfig {
    /// IPPT decoding candidates; empty means the checkpoint's training temperatures.
    pub candidates: Vec<f64>,
    pub materials: PhaseMaterials,
    pub homogenization: HomogenizationConfig,
    /// Microstructure channel threshold (crystal at or above).
    pub threshold: f32,
    pub n_per_condition: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            candidates: Vec::new(),
            materials: PhaseMaterials::default(),
            homogenization: HomogenizationConfig::default(),
            threshold: 0.5,
            n_per_condition: 4,
            batch_size: 16,
            seed: 0,
        }
    }
}

/// One generated (or supplied) image and its re-homogenized properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub sample: usize,
    pub condition: usize,
    pub input_d1111: f64,
    pub input_d2222: f64,
    pub input_d1212: f64,
    pub decoded_tc: Option<f64>,
    pub ippt_score: Option<f64>,
    pub low_confidence: bool,
    pub crystal_fraction: f64,
    pub xfem_d1111: Option<f64>,
    pub xfem_d2222: Option<f64>,
    pub xfem_d1212: Option<f64>,
    pub e: Option<f64>,
    pub nu: Option<f64>,
    pub nearest_distance: Option<f64>,
    pub error: Option<String>,
}

impl ValidationRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn xfem(&self) -> Option<[f64; 3]> {
        Some([self.xfem_d1111?, self.xfem_d2222?, self.xfem_d1212?])
    }

    pub fn input(&self) -> [f64; 3] {
        [self.input_d1111, self.input_d2222, self.input_d1212]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSummary {
    pub tc: f64,
    pub count: usize,
    pub d1111: Option<Summary>,
    pub d2222: Option<Summary>,
    pub d1212: Option<Summary>,
    pub youngs: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// Pearson r of input vs recomputed D per component, `None` when undefined.
    pub pearson: [Option<f64>; 3],
    pub per_temperature: Vec<TemperatureSummary>,
    pub failed: usize,
    pub low_confidence: usize,
    pub neighbors: Option<Summary>,
}

impl ValidationReport {
    pub fn from_rows(rows: Vec<ValidationRow>) -> Self {
        let ok: Vec<&ValidationRow> = rows.iter().filter(|r| r.xfem().is_some()).collect();
        let pearson = std::array::from_fn(|k| {
            let xs: Vec<f64> = ok.iter().map(|r| r.input()[k]).collect();
            let ys: Vec<f64> = ok.iter().map(|r| r.xfem().unwrap()[k]).collect();
            pearson(&xs, &ys)
        });
        let mut by_tc: BTreeMap<i64, Vec<&ValidationRow>> = BTreeMap::new();
        for r in &ok {
            if let Some(tc) = r.decoded_tc {
                by_tc.entry((tc * 1000.0).round() as i64).or_default().push(r);
            }
        }
        let per_temperature = by_tc
            .into_iter()
            .map(|(key, rs)| {
                let col = |k: usize| Summary::of(&rs.iter().map(|r| r.xfem().unwrap()[k]).collect::<Vec<_>>());
                TemperatureSummary {
                    tc: key as f64 / 1000.0,
                    count: rs.len(),
                    d1111: col(0),
                    d2222: col(1),
                    d1212: col(2),
                    youngs: Summary::of(&rs.iter().filter_map(|r| r.e).collect::<Vec<_>>()),
                }
            })
            .collect();
        let distances: Vec<f64> = rows.iter().filter_map(|r| r.nearest_distance).collect();
        Self {
            failed: rows.iter().filter(|r| r.failed()).count(),
            low_confidence: rows.iter().filter(|r| r.low_confidence).count(),
            neighbors: Summary::of(&distances),
            pearson,
            per_temperature,
            rows,
        }
    }

    /// `validation.csv` (one row per sample) and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("validation.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        let summary = serde_json::json!({
            "samples": self.rows.len(),
            "failed": self.failed,
            "low_confidence": self.low_confidence,
            "pearson": { "d1111": self.pearson[0], "d2222": self.pearson[1], "d1212": self.pearson[2] },
            "per_temperature": self.per_temperature,
            "nearest_neighbor_distance": self.neighbors,
        });
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
        Ok(())
    }
}

/// Threshold, decode, re-homogenize and compare a batch of two-channel images.
///
/// `inputs[i]` is `(condition index, raw D_input)` for image `i`; `training`
/// holds microstructure channels for the nearest-neighbour distance.
pub fn validate_images(
    images: &[Array3<f32>],
    inputs: &[(usize, [f64; 3])],
    candidates: &[f64],
    cfg: &ValidateConfig,
    training: Option<&[Array2<f32>]>,
) -> Result<ValidationReport> {
    if images.len() != inputs.len() {
        return Err(PipelineError::Shape(format!("{} images for {} inputs", images.len(), inputs.len())));
    }
    let rows = images
        .par_iter()
        .zip(inputs)
        .enumerate()
        .map(|(i, (img, &(cond, d_in)))| validate_one(i, cond, d_in, img, candidates, cfg, training))
        .collect();
    Ok(ValidationReport::from_rows(rows))
}

fn validate_one(
    sample: usize,
    condition: usize,
    d_in: [f64; 3],
    img: &Array3<f32>,
    candidates: &[f64],
    cfg: &ValidateConfig,
    training: Option<&[Array2<f32>]>,
) -> ValidationRow {
    let mut row = ValidationRow {
        sample,
        condition,
        input_d1111: d_in[0],
        input_d2222: d_in[1],
        input_d1212: d_in[2],
        decoded_tc: None,
        ippt_score: None,
        low_confidence: false,
        crystal_fraction: 0.0,
        xfem_d1111: None,
        xfem_d2222: None,
        xfem_d1212: None,
        e: None,
        nu: None,
        nearest_distance: None,
        error: None,
    };
    if img.dim().0 < 2 {
        row.error = Some(format!("expected two channels, got {:?}", img.dim()));
        return row;
    }
    let micro = img.index_axis(Axis(0), 0);
    let cells = micro.mapv(|v| if v >= cfg.threshold { 1.0f64 } else { 0.0 });
    row.crystal_fraction = cells.mean().unwrap_or(0.0);
    match decode_ippt(&img.index_axis(Axis(0), 1).mapv(f64::from), candidates) {
        Ok(d) => {
            row.decoded_tc = Some(d.tc);
            row.ippt_score = Some(d.score);
            row.low_confidence = d.low_confidence;
        }
        Err(e) => row.low_confidence = { log::warn!("sample {sample}: IPPT decode failed: {e}"); true },
    }
    if let Some(train) = training {
        let binary = cells.mapv(|v| v as f32);
        row.nearest_distance =
            train.iter().map(|t| mean_squared_distance(binary.view(), t.view())).min_by(f64::total_cmp);
    }
    match homogenize_with(&cells, &cfg.materials, &cfg.homogenization) {
        Ok(h) => {
            let c = h.d.condition();
            row.xfem_d1111 = Some(c[0]);
            row.xfem_d2222 = Some(c[1]);
            row.xfem_d1212 = Some(c[2]);
            match effective_constants(&h.d) {
                Ok((e, nu)) => {
                    row.e = Some(e);
                    row.nu = Some(nu);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn candidates_for(cfg: &ValidateConfig, ckpt: &Checkpoint) -> Vec<f64> {
    if !cfg.candidates.is_empty() {
        cfg.candidates.clone()
    } else if !ckpt.temperatures.is_empty() {
        ckpt.temperatures.clone()
    } else {
        vec![160.0, 180.0, 200.0]
    }
}

/// Sample `n_per_condition` images for each raw condition (MPa).
pub fn generate(ckpt: &Checkpoint, raw_conditions: &[[f64; 3]], cfg: &ValidateConfig) -> Result<(Vec<Array3<f32>>, Vec<(usize, [f64; 3])>)> {
    let stats = ckpt.norm_stats.ok_or_else(|| PipelineError::Checkpoint("checkpoint carries no normalization statistics".into()))?;
    let mut inputs = Vec::new();
    for (ci, raw) in raw_conditions.iter().enumerate() {
        for _ in 0..cfg.n_per_condition {
            inputs.push((ci, *raw));
        }
    }
    let shape = (ckpt.image_shape[0], ckpt.image_shape[1], ckpt.image_shape[2]);
    let mut images = Vec::with_capacity(inputs.len());
    for (chunk_index, chunk) in inputs.chunks(cfg.batch_size.max(1)).enumerate() {
        let conds: Vec<[f64; 3]> = chunk.iter().map(|(_, raw)| stats.normalize(*raw)).collect();
        let seed = derive_seed(cfg.seed, VALIDATE_KEY, chunk_index as u64);
        images.extend(p_sample_loop(&ckpt.trainer.net, &ckpt.trainer.schedule, shape, &conds, seed)?);
    }
    Ok((images, inputs))
}

/// Generate for each condition, then validate by re-homogenization.
pub fn validate(
    ckpt: &Checkpoint,
    raw_conditions: &[[f64; 3]],
    cfg: &ValidateConfig,
    training: Option<&[Array2<f32>]>,
) -> Result<(ValidationReport, Vec<Array3<f32>>)> {
    let (images, inputs) = generate(ckpt, raw_conditions, cfg)?;
    let report = validate_images(&images, &inputs, &candidates_for(cfg, ckpt), cfg, training)?;
    Ok((report, images))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoOutcome {
    pub request: DemoRequest,
    pub target_d: [f64; 3],
    pub condition: [f64; 3],
    pub clamped: bool,
    /// Most frequently decoded temperature among the samples.
    pub proposed_tc: Option<f64>,
    pub achieved_e: Option<f64>,
    pub achieved_nu: Option<f64>,
    pub report: ValidationReport,
}

/// Propose a processing temperature and structure for target `(E, ν)`.
pub fn demo(req: DemoRequest, ckpt: &Checkpoint, cfg: &ValidateConfig) -> Result<(DemoOutcome, Vec<Array3<f32>>)> {
    req.validate()?;
    let target_d = dmat_from_constants(req.e_target, req.nu_target)?;
    let stats = ckpt.norm_stats.ok_or_else(|| PipelineError::Checkpoint("checkpoint carries no normalization statistics".into()))?;
    let (condition, clamped) = stats.normalize_checked(target_d);
    if clamped {
        log::warn!("target D {target_d:?} lies outside the training range; condition clamped to {condition:?}");
    }
    let (report, images) = validate(ckpt, &[target_d], cfg, None)?;
    let mut votes: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
    for r in &report.rows {
        if let (Some(tc), Some(s)) = (r.decoded_tc, r.ippt_score) {
            let e = votes.entry((tc * 1000.0).round() as i64).or_default();
            e.0 += 1;
            e.1 += s;
        }
    }
    let proposed_tc = votes
        .iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.1 .1.total_cmp(&b.1 .1)))
        .map(|(k, _)| *k as f64 / 1000.0);
    let es: Vec<f64> = report.rows.iter().filter_map(|r| r.e).collect();
    let nus: Vec<f64> = report.rows.iter().filter_map(|r| r.nu).collect();
    let outcome = DemoOutcome {
        request: req,
        target_d,
        condition,
        clamped,
        proposed_tc,
        achieved_e: Summary::of(&es).map(|s| s.median),
        achieved_nu: Summary::of(&nus).map(|s| s.median),
        report,
    };
    Ok((outcome, images))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_ippt;
    use ndarray::{s, Array2};

    fn image(cells: &Array2<f64>, tc: f64) -> Array3<f32> {
        let mut img = Array3::zeros((2, 64, 64));
        img.slice_mut(s![0, .., ..]).assign(&cells.mapv(|v| v as f32));
        img.slice_mut(s![1, .., ..]).assign(&make_ippt(tc).unwrap().pixels.mapv(|v| v as f32));
        img
    }

    fn structures() -> Vec<(Array2<f64>, f64)> {
        vec![
            (Array2::from_shape_fn((64, 64), |(_, c)| f64::from(u8::from(c < 32))), 160.0),
            (Array2::from_shape_fn((64, 64), |(r, c)| f64::from(u8::from((r as f64 - 31.5).hypot(c as f64 - 31.5) < 20.0))), 180.0),
            (Array2::from_shape_fn((64, 64), |(r, c)| f64::from(u8::from(r % 16 < 4 || c % 16 < 4))), 200.0),
        ]
    }

    #[test]
    fn supplied_structures_reproduce_their_conditions() {
        let cfg = ValidateConfig::default();
        let cases = structures();
        let mut images = Vec::new();
        let mut inputs = Vec::new();
        for (i, (cells, tc)) in cases.iter().enumerate() {
            let d = homogenize_with(cells, &cfg.materials, &cfg.homogenization).unwrap().d.condition();
            images.push(image(cells, *tc));
            inputs.push((i, d));
        }
        let report = validate_images(&images, &inputs, &[160.0, 180.0, 200.0], &cfg, None).unwrap();
        assert_eq!(report.failed, 0);
        for (row, (_, tc)) in report.rows.iter().zip(&cases) {
            assert_eq!(row.decoded_tc, Some(*tc));
            let x = row.xfem().unwrap();
            for k in 0..3 {
                assert!((x[k] - row.input()[k]).abs() <= 1e-9 * row.input()[k].abs());
            }
        }
        for r in report.pearson {
            assert!((r.unwrap() - 1.0).abs() < 1e-9);
        }
        assert_eq!(report.per_temperature.len(), 3);
    }

    #[test]
    fn empty_batch_gives_empty_report() {
        let report = validate_images(&[], &[], &[160.0], &ValidateConfig::default(), None).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.pearson, [None, None, None]);
        assert_eq!(report.failed, 0);
        assert!(report.neighbors.is_none());
    }

    #[test]
    fn bad_image_is_flagged_not_fatal() {
        let cfg = ValidateConfig::default();
        let good = image(&structures()[0].0, 160.0);
        let bad = Array3::zeros((1, 64, 64));
        let inputs = [(0, [1.0, 1.0, 1.0]), (0, [1.0, 1.0, 1.0])];
        let report = validate_images(&[bad, good], &inputs, &[160.0], &cfg, None).unwrap();
        assert_eq!(report.failed, 1);
        assert!(report.rows[0].failed());
        assert!(!report.rows[1].failed());
        assert!(validate_images(&[], &inputs, &[160.0], &cfg, None).is_err());
    }

    #[test]
    fn nearest_distance_and_outputs() {
        let cfg = ValidateConfig::default();
        let (cells, tc) = structures().remove(0);
        let train = vec![cells.mapv(|v| v as f32), cells.mapv(|v| 1.0 - v as f32)];
        let report = validate_images(&[image(&cells, tc)], &[(0, [1.0; 3])], &[tc], &cfg, Some(&train)).unwrap();
        assert_eq!(report.rows[0].nearest_distance, Some(0.0));

        let dir = tempfile::tempdir().unwrap();
        report.write(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("validation.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("sample,condition,input_d1111"));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["samples"], 1);
    }
}
