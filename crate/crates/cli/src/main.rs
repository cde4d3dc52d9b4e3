//! `microgen`: dataset generation, homogenization, diffusion training,
//! sampling, validation and the target-property demo.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::{Array3, Axis};

use config::{load, pick, DemoFile, GenDataFile, HomogenizeFile, NeighborsFile, SampleFile, TrainFile, ValidateFile};
use microgen_core::dataset::{read_tensor, write_preview, write_tensor, Dataset, TrainingSample};
use microgen_core::diffusion::{Checkpoint, Example, NoiseSchedule, Trainer, UNet};
use microgen_core::homogenization::effective_constants;
use microgen_core::phase_field::read_microstructure;
use microgen_core::pipeline::{self, DemoRequest, ValidateConfig, ValidationReport};
use microgen_core::homogenize_with;

#[derive(Parser)]
#[command(name = "microgen", version, about = "Inverse design of two-phase resin microstructures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML or JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run phase-field simulations and write a training dataset.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Homogenize one microstructure PNG.
    Homogenize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        /// JSON result file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train (or resume training) the conditional denoiser.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Draw images for raw (D1111, D2222, D1212) conditions.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `D1111,D2222,D1212` in MPa; repeatable.
        #[arg(long = "condition", value_parser = parse_condition)]
        conditions: Vec<[f64; 3]>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Generate for held-out conditions and re-homogenize the results.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Propose structures and a processing temperature for target E and ν.
    Demo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "e")]
        e_target: Option<f64>,
        #[arg(long = "nu")]
        nu_target: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Nearest-training-image distances of generated samples.
    ReportNeighbors {
        #[command(flatten)]
        common: Common,
        /// `samples.bin` written by `sample`, `validate` or `demo`.
        #[arg(long)]
        generated: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_condition(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|p| format!("expected three comma-separated values, got {}", p.len()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::GenData { common, out } => gen_data(&common, out),
        Command::Homogenize { common, input, out } => homogenize(&common, input, out),
        Command::Train { common, data, out, resume, steps } => train(&common, data, out, resume, steps),
        Command::Sample { common, checkpoint, out, conditions, n } => sample(&common, checkpoint, out, conditions, n),
        Command::Validate { common, checkpoint, data, out, n } => validate(&common, checkpoint, data, out, n),
        Command::Demo { common, checkpoint, out, e_target, nu_target, n } => {
            demo(&common, checkpoint, out, e_target, nu_target, n)
        }
        Command::ReportNeighbors { common, generated, data, out } => report_neighbors(&common, generated, data, out),
    }
}

fn gen_data(common: &Common, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut file: GenDataFile = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        file.generation.seed = seed;
    }
    let out = pick(out, &file.out, "output")?;
    let ds = pipeline::gen_data(&file.generation, &out)?;
    log::info!(
        "wrote {} train / {} val / {} test samples to {}",
        ds.train.len(),
        ds.val.len(),
        ds.test.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn homogenize(common: &Common, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<ExitCode> {
    let file: HomogenizeFile = load(common.config.as_deref())?;
    let input = pick(input, &file.input, "input")?;
    let (micro, _) = read_microstructure(&input)?;
    let h = homogenize_with(&micro.to_phi(), &file.materials, &file.homogenization)?;
    let (e, nu) = effective_constants(&h.d).map_or((None, None), |(e, nu)| (Some(e), Some(nu)));
    let record = serde_json::json!({ "input": input, "result": h, "youngs_modulus": e, "poisson_ratio": nu });
    let text = serde_json::to_string_pretty(&record)?;
    match out.or(file.out) {
        Some(path) => {
            write_text(&path, &text)?;
            if let Some(stress) = &h.stress {
                stress.write(&path.with_extension("stress.bin"))?;
            }
        }
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn examples(samples: &[TrainingSample]) -> Vec<Example> {
    samples.iter().map(|s| Example { image: s.image.clone(), condition: s.condition }).collect()
}

fn train(
    common: &Common,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    resume: Option<PathBuf>,
    steps: Option<u64>,
) -> Result<ExitCode> {
    let mut file: TrainFile = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        file.train.seed = seed;
    }
    if let Some(steps) = steps {
        file.train.steps = steps;
    }
    let data = pick(data, &file.data, "dataset")?;
    let out = pick(out, &file.out, "checkpoint")?;
    let ds = Dataset::read(&data)?;
    let Some(first) = ds.train.first() else { bail!("dataset {} has no training samples", data.display()) };
    let (c, h, w) = first.image.dim();

    let mut ckpt = match resume.or(file.resume) {
        Some(path) => {
            let mut ckpt = Checkpoint::load(&path)?;
            if ckpt.image_shape != [c, h, w] {
                bail!("checkpoint image shape {:?} does not match dataset {:?}", ckpt.image_shape, [c, h, w]);
            }
            ckpt.trainer.config.steps = file.train.steps;
            log::info!("resuming from step {}", ckpt.trainer.step);
            ckpt
        }
        None => {
            let schedule = NoiseSchedule::new(file.schedule.clone())?;
            let trainer = Trainer::new(UNet::new(file.unet.clone())?, schedule, file.train.clone())?;
            Checkpoint { trainer, image_shape: [c, h, w], norm_stats: Some(ds.norm_stats), temperatures: ds.temperatures.clone() }
        }
    };
    ckpt.trainer.fit(&examples(&ds.train))?;
    ckpt.save(&out)?;
    let losses: String = std::iter::once("step,loss".to_string())
        .chain(ckpt.trainer.losses.iter().enumerate().map(|(i, l)| format!("{},{l}", i + 1)))
        .collect::<Vec<_>>()
        .join("\n");
    write_text(&out.with_extension("losses.csv"), &(losses + "\n"))?;
    log::info!("saved checkpoint at step {} to {}", ckpt.trainer.step, out.display());
    Ok(ExitCode::SUCCESS)
}

fn sample(
    common: &Common,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
    conditions: Vec<[f64; 3]>,
    n: Option<usize>,
) -> Result<ExitCode> {
    let file: SampleFile = load(common.config.as_deref())?;
    let ckpt = Checkpoint::load(&pick(checkpoint, &file.checkpoint, "checkpoint")?)?;
    let out = pick(out, &file.out, "output")?;
    let conditions = if conditions.is_empty() { file.conditions } else { conditions };
    if conditions.is_empty() {
        bail!("no conditions given");
    }
    let mut cfg = ValidateConfig::default();
    cfg.n_per_condition = n.or(file.n_per_condition).unwrap_or(cfg.n_per_condition);
    cfg.batch_size = file.batch_size.unwrap_or(cfg.batch_size);
    cfg.seed = common.seed.unwrap_or(cfg.seed);
    let (images, inputs) = pipeline::generate(&ckpt, &conditions, &cfg)?;
    write_images(&out, &images)?;
    let index: Vec<_> = inputs
        .iter()
        .enumerate()
        .map(|(i, (c, d))| serde_json::json!({ "sample": i, "condition": c, "raw_condition": d }))
        .collect();
    write_text(&out.join("samples.json"), &serde_json::to_string_pretty(&index)?)?;
    log::info!("wrote {} samples to {}", images.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(
    common: &Common,
    checkpoint: Option<PathBuf>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    n: Option<usize>,
) -> Result<ExitCode> {
    let mut file: ValidateFile = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        file.validation.seed = seed;
    }
    if let Some(n) = n {
        file.validation.n_per_condition = n;
    }
    let ckpt = Checkpoint::load(&pick(checkpoint, &file.checkpoint, "checkpoint")?)?;
    let ds = Dataset::read(&pick(data, &file.data, "dataset")?)?;
    let out = pick(out, &file.out, "output")?;
    let split = match file.split.as_deref().unwrap_or("test") {
        "test" => &ds.test,
        "val" => &ds.val,
        "train" => &ds.train,
        other => bail!("unknown split {other:?}"),
    };
    let mut conditions: Vec<[f64; 3]> = Vec::new();
    for s in split {
        if !conditions.contains(&s.raw_condition) {
            conditions.push(s.raw_condition);
        }
    }
    if let Some(max) = file.max_conditions {
        conditions.truncate(max);
    }
    if conditions.is_empty() {
        bail!("split has no samples to validate against");
    }
    let train = training_micro(&ds);
    let (report, images) = pipeline::validate(&ckpt, &conditions, &file.validation, Some(&train))?;
    write_report(&out, &report, &images)?;
    Ok(ExitCode::SUCCESS)
}

fn demo(
    common: &Common,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
    e_target: Option<f64>,
    nu_target: Option<f64>,
    n: Option<usize>,
) -> Result<ExitCode> {
    let mut file: DemoFile = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        file.validation.seed = seed;
    }
    if let Some(n) = n {
        file.validation.n_per_condition = n;
    }
    let req = DemoRequest {
        e_target: e_target.or(file.e_target).context("no target E given")?,
        nu_target: nu_target.or(file.nu_target).context("no target nu given")?,
    };
    let ckpt = Checkpoint::load(&pick(checkpoint, &file.checkpoint, "checkpoint")?)?;
    let out = pick(out, &file.out, "output")?;
    let (outcome, images) = pipeline::demo(req, &ckpt, &file.validation)?;
    write_report(&out, &outcome.report, &images)?;
    write_text(&out.join("demo.json"), &serde_json::to_string_pretty(&outcome)?)?;
    match outcome.proposed_tc {
        Some(tc) => log::info!(
            "proposed Tc = {tc} °C; achieved E = {:?} MPa, nu = {:?}",
            outcome.achieved_e,
            outcome.achieved_nu
        ),
        None => log::warn!("no sample carried a decodable temperature pattern"),
    }
    Ok(ExitCode::SUCCESS)
}

fn report_neighbors(
    common: &Common,
    generated: Option<PathBuf>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let file: NeighborsFile = load(common.config.as_deref())?;
    let generated = read_tensor(&pick(generated, &file.generated, "generated samples")?)?
        .into_dimensionality::<ndarray::Ix4>()
        .context("generated tensor must be (N, C, H, W)")?;
    let ds = Dataset::read(&pick(data, &file.data, "dataset")?)?;
    let train = training_micro(&ds);
    let gen_views: Vec<_> = generated.axis_iter(Axis(0)).map(|img| img.index_axis_move(Axis(0), 0)).collect();
    let train_views: Vec<_> = train.iter().map(|t| t.view()).collect();
    let report = pipeline::report_neighbors(&gen_views, &train_views)?;
    let text = serde_json::to_string_pretty(&report)?;
    match out.or(file.out) {
        Some(path) => write_text(&path, &text)?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn training_micro(ds: &Dataset) -> Vec<ndarray::Array2<f32>> {
    ds.train.iter().map(|s| s.image.index_axis(Axis(0), 0).to_owned()).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `samples.bin` holding all images as one (N, C, H, W) tensor plus PNG previews.
fn write_images(out: &Path, images: &[Array3<f32>]) -> Result<()> {
    std::fs::create_dir_all(out.join("images"))?;
    for (i, img) in images.iter().enumerate() {
        write_preview(&out.join(format!("images/{i:04}.png")), img)?;
    }
    if let Some(first) = images.first() {
        let (c, h, w) = first.dim();
        let data: Vec<f32> = images.iter().flat_map(|img| img.iter().copied()).collect();
        write_tensor(&out.join("samples.bin"), &[images.len(), c, h, w], &data)?;
    }
    Ok(())
}

fn write_report(out: &Path, report: &ValidationReport, images: &[Array3<f32>]) -> Result<()> {
    report.write(out)?;
    write_images(out, images)?;
    let [r1, r2, r3] = report.pearson;
    log::info!(
        "{} samples, {} failed, {} low-confidence; Pearson r D1111 {r1:?} D2222 {r2:?} D1212 {r3:?}",
        report.rows.len(),
        report.failed,
        report.low_confidence
    );
    Ok(())
}
