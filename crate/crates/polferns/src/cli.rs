//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polferns_core::eval::{
    calibration_curve, confusion, entropy_histogram, metrics, DEFAULT_CALIBRATION_BINS,
};
use polferns_core::features::FeatureConfig;
use polferns_core::ferns::{classify_image, ClassPrior, TrainConfig};
use polferns_core::optimize::{fit, FitConfig, IterConfig, Objective, Strategy};
use polferns_core::polsar::{precompute_image, LabelMap, PolSarImage};
use polferns_core::synth::{generate_scene, Layout, Preset};

use crate::crossval::{crossval, runs_csv, summarize, summary_kv, summary_table, CrossvalConfig};
use crate::error::{Error, Result};
use crate::io::{
    load_model, read_covariance_raster, read_label_map, read_posteriors, save_model,
    write_covariance_raster, write_label_map, write_posteriors, PosteriorRaster, Precision,
};
use crate::manifest::RunManifest;
use crate::report::{
    calibration_csv, confusion_table, entropy_csv, metrics_kv, metrics_table, trace_csv,
};

#[derive(Debug, Parser)]
#[command(
    name = "polferns",
    version,
    about = "Random ferns for PolSAR covariance rasters"
)]
pub struct Cli {
    /// Maximum number of worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene.
    Synth(SynthArgs),
    /// Train a model on a labeled scene.
    Train(TrainArgs),
    /// Classify a scene with a saved model.
    Predict(PredictArgs),
    /// Score a prediction against reference labels.
    Evaluate(EvaluateArgs),
    /// Vertical-stripe cross-validation.
    Crossval(CrossvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    FiveClass,
    TwoClass,
    Null,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::FiveClass => Preset::FiveClass,
            PresetArg::TwoClass => Preset::TwoClass,
            PresetArg::Null => Preset::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Stripes,
    Blocks,
    Voronoi,
    ThinLines,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    #[value(name = "32")]
    F32,
    #[value(name = "64")]
    F64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizeArg {
    None,
    Preselect,
    Iterative,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PriorArg {
    Uniform,
    Empirical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Aa,
    Oa,
    Kappa,
    F1,
    Miou,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "five-class")]
    pub preset: PresetArg,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Use only the first CLASSES signatures of the preset.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 9)]
    pub looks: usize,
    #[arg(long, value_enum, default_value = "stripes")]
    pub layout: LayoutArg,
    /// Tile edge for the blocks layout.
    #[arg(long, default_value_t = 16)]
    pub block_size: usize,
    /// Cell count for the voronoi and thin-lines layouts.
    #[arg(long, default_value_t = 40)]
    pub voronoi_seeds: usize,
    #[arg(long, default_value_t = 2)]
    pub line_width: usize,
    #[arg(long, default_value_t = 32)]
    pub line_spacing: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Float width of the written raster.
    #[arg(long, value_enum, default_value = "64")]
    pub precision: PrecisionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 30)]
    pub ferns: usize,
    #[arg(long, default_value_t = 8)]
    pub fern_size: usize,
    #[arg(long, default_value_t = 3000)]
    pub samples_per_class: usize,
    /// Laplace smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 25.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 9)]
    pub s_max: u32,
    /// Probability of drawing a one-point projection.
    #[arg(long, default_value_t = 0.5)]
    pub one_point_prob: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "none")]
    pub optimize: OptimizeArg,
    #[arg(long, default_value_t = 2000)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub ig_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub corr_max: f64,
    #[arg(long, default_value_t = 30)]
    pub it_min: usize,
    #[arg(long, default_value_t = 15)]
    pub patience: usize,
    /// Starting ensemble of the iterative search (without preselection).
    #[arg(long, default_value_t = 5)]
    pub init_ferns: usize,
    #[arg(long, default_value_t = 6)]
    pub init_fern_size: usize,
    #[arg(long, value_enum, default_value = "aa")]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
}

impl FitArgs {
    pub fn to_config(&self) -> FitConfig {
        FitConfig {
            train: TrainConfig {
                num_ferns: self.ferns,
                fern_size: self.fern_size,
                samples_per_class: self.samples_per_class,
                smoothing: self.smoothing,
                seed: self.seed,
                features: FeatureConfig {
                    r_max: self.r_max,
                    s_max: self.s_max,
                    one_point_prob: self.one_point_prob,
                },
                prior: match self.prior {
                    PriorArg::Uniform => ClassPrior::Uniform,
                    PriorArg::Empirical => ClassPrior::Empirical,
                },
            },
            strategy: match self.optimize {
                OptimizeArg::None => Strategy::None,
                OptimizeArg::Preselect => Strategy::Preselect,
                OptimizeArg::Iterative => Strategy::Iterative,
                OptimizeArg::Both => Strategy::Both,
            },
            pool_size: self.pool_size,
            ig_threshold: self.ig_min,
            corr_threshold: self.corr_max,
            iterative: IterConfig {
                it_min: self.it_min,
                patience: self.patience,
                init_ferns: self.init_ferns,
                init_fern_size: self.init_fern_size,
                objective: match self.objective {
                    ObjectiveArg::Aa => Objective::AverageAccuracy,
                    ObjectiveArg::Oa => Objective::OverallAccuracy,
                    ObjectiveArg::Kappa => Objective::Kappa,
                    ObjectiveArg::F1 => Objective::F1Macro,
                    ObjectiveArg::Miou => Objective::MeanIou,
                },
            },
            val_fraction: self.val_fraction,
        }
    }
}

/// Rejects configurations that would only fail after loading data.
pub fn validate_fit_config(cfg: &FitConfig) -> Result<()> {
    let usage = |e: polferns_core::Error| Error::Usage(e.to_string());
    cfg.train.validate().map_err(usage)?;
    if matches!(cfg.strategy, Strategy::Preselect | Strategy::Both) {
        if cfg.pool_size < 1 {
            return Err(Error::Usage("--pool-size must be at least 1".into()));
        }
        if !(cfg.ig_threshold >= 0.0 && cfg.ig_threshold <= 1.0) {
            return Err(Error::Usage(format!(
                "--ig-min must lie in [0, 1], got {}",
                cfg.ig_threshold
            )));
        }
        if !(cfg.corr_threshold > 0.0 && cfg.corr_threshold <= 1.0) {
            return Err(Error::Usage(format!(
                "--corr-max must lie in (0, 1], got {}",
                cfg.corr_threshold
            )));
        }
    }
    if matches!(cfg.strategy, Strategy::Iterative | Strategy::Both) {
        cfg.iterative.validate().map_err(usage)?;
        if !(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) {
            return Err(Error::Usage(format!(
                "--val-fraction must lie in (0, 1), got {}",
                cfg.val_fraction
            )));
        }
    }
    Ok(())
}

fn describe_fit(m: &mut RunManifest, cfg: &FitConfig) {
    let t = &cfg.train;
    m.seed = Some(t.seed);
    m.config("optimize", cfg.strategy.name())
        .config("ferns", t.num_ferns)
        .config("fern_size", t.fern_size)
        .config("samples_per_class", t.samples_per_class)
        .config("smoothing", format!("{:?}", t.smoothing))
        .config("r_max", format!("{:?}", t.features.r_max))
        .config("s_max", t.features.s_max)
        .config("one_point_prob", format!("{:?}", t.features.one_point_prob))
        .config("prior", format!("{:?}", t.prior).to_lowercase())
        .config("pool_size", cfg.pool_size)
        .config("ig_min", format!("{:?}", cfg.ig_threshold))
        .config("corr_max", format!("{:?}", cfg.corr_threshold))
        .config("it_min", cfg.iterative.it_min)
        .config("patience", cfg.iterative.patience)
        .config("init_ferns", cfg.iterative.init_ferns)
        .config("init_fern_size", cfg.iterative.init_fern_size)
        .config("objective", cfg.iterative.objective.name())
        .config("val_fraction", format!("{:?}", cfg.val_fraction));
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Class count; inferred from the largest label when omitted.
    #[arg(long)]
    pub classes: Option<u8>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Classify only the labeled pixels of this map.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Also write the per-pixel posterior raster.
    #[arg(long)]
    pub posteriors: bool,
    /// Expected class count; must match the model.
    #[arg(long)]
    pub classes: Option<u8>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Posterior raster written by `predict --posteriors`.
    #[arg(long)]
    pub posteriors: Option<PathBuf>,
    /// Write a calibration curve (needs --posteriors).
    #[arg(long)]
    pub calibration: bool,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub classes: Option<u8>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub classes: Option<u8>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 4)]
    pub repeats: usize,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::io(path))
}

/// Reads a `PSC1` raster and precomputes its log and span rasters.
pub fn load_image(path: &Path) -> Result<PolSarImage> {
    let (raster, _) = read_covariance_raster(path)?;
    precompute_image(raster.width, raster.height, raster.pixels).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        offset: 0,
        message: e.to_string(),
    })
}

fn load_labels(path: &Path, classes: Option<u8>, img: &PolSarImage) -> Result<LabelMap> {
    let labels = read_label_map(path, classes)?;
    if !labels.same_shape(img.width(), img.height()) {
        return Err(polferns_core::Error::DimensionMismatch(
            img.width(),
            img.height(),
            labels.width(),
            labels.height(),
        )
        .into());
    }
    Ok(labels)
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        // A second initialization (library use) keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Crossval(a) => cmd_crossval(&a),
    }
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let preset = Preset::from(a.preset);
    let layout = match a.layout {
        LayoutArg::Stripes => Layout::Stripes,
        LayoutArg::Blocks => Layout::Blocks { size: a.block_size },
        LayoutArg::Voronoi => Layout::Voronoi {
            seeds: a.voronoi_seeds,
        },
        LayoutArg::ThinLines => Layout::ThinLines {
            line_width: a.line_width,
            spacing: a.line_spacing,
        },
    };
    let mut cfg = preset.scene(a.width, a.height, a.looks, a.seed);
    cfg.layout = layout;
    if let Some(k) = a.classes {
        if !(2..=cfg.signatures.len()).contains(&k) {
            return Err(Error::Usage(format!(
                "--classes must lie in [2, {}] for preset {}, got {k}",
                cfg.signatures.len(),
                preset.name()
            )));
        }
        cfg.signatures.truncate(k);
    }
    if u32::try_from(a.width).is_err() || u32::try_from(a.height).is_err() {
        return Err(Error::Usage("scene dimensions must fit in 32 bits".into()));
    }
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let precision = match a.precision {
        PrecisionArg::F32 => Precision::F32,
        PrecisionArg::F64 => Precision::F64,
    };

    create_out(&a.out)?;
    let start = Instant::now();
    let (img, labels) = generate_scene(&cfg)?;
    let generated = start.elapsed();
    let image_path = a.out.join("image.psc");
    let labels_path = a.out.join("labels.pgm");
    let start = Instant::now();
    write_covariance_raster(&image_path, img.width(), img.height(), img.cov(), precision)?;
    write_label_map(&labels_path, &labels)?;

    let mut m = RunManifest::new("synth");
    m.seed = Some(a.seed);
    m.config("preset", preset.name())
        .config("width", a.width)
        .config("height", a.height)
        .config("classes", cfg.signatures.len())
        .config("looks", a.looks)
        .config("layout", layout.name());
    match layout {
        Layout::Blocks { size } => {
            m.config("block_size", size);
        }
        Layout::Voronoi { seeds } => {
            m.config("voronoi_seeds", seeds);
        }
        Layout::ThinLines {
            line_width,
            spacing,
        } => {
            m.config("voronoi_seeds", a.voronoi_seeds)
                .config("line_width", line_width)
                .config("line_spacing", spacing);
        }
        Layout::Stripes => {}
    }
    for (i, s) in cfg.signatures.iter().enumerate() {
        let values: Vec<String> = s.sigma.0.iter().map(|v| format!("{v:?}")).collect();
        m.config(
            &format!("signature.{}", i + 1),
            format!("{} {}", s.name, values.join(",")),
        );
    }
    m.config("precision", precision.bits())
        .output("image", &image_path)
        .output("labels", &labels_path)
        .timing("generate", generated)
        .timing("write", start.elapsed());
    m.write(&a.out)?;
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg = a.fit.to_config();
    validate_fit_config(&cfg)?;
    let start = Instant::now();
    let img = load_image(&a.image)?;
    let labels = load_labels(&a.labels, a.classes, &img)?;
    let loaded = start.elapsed();

    let start = Instant::now();
    let outcome = fit(&img, &labels, &cfg)?;
    let trained = start.elapsed();

    create_out(&a.out)?;
    let model_path = a.out.join("model.txt");
    save_model(&model_path, &outcome.model)?;
    let mut m = RunManifest::new("train");
    describe_fit(&mut m, &cfg);
    m.config("classes", labels.num_classes())
        .input("image", &a.image)
        .input("labels", &a.labels)
        .output("model", &model_path);
    if !outcome.trace.is_empty() {
        let trace_path = a.out.join("trace.csv");
        write_text(&trace_path, &trace_csv(&outcome.trace))?;
        m.output("trace", &trace_path);
    }
    m.config("result.ferns", outcome.model.num_ferns())
        .config("result.features", outcome.model.num_features())
        .timing("load", loaded)
        .timing("train", trained);
    m.write(&a.out)?;
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    if let Some(k) = a.classes {
        if k != model.num_classes() {
            return Err(Error::Usage(format!(
                "--classes {k} does not match the model's {} classes",
                model.num_classes()
            )));
        }
    }
    let img = load_image(&a.image)?;
    let mask = a
        .mask
        .as_ref()
        .map(|p| load_labels(p, Some(model.num_classes()), &img))
        .transpose()?;
    let start = Instant::now();
    let result = classify_image(&model, &img, mask.as_ref())?;
    let elapsed = start.elapsed();

    create_out(&a.out)?;
    let pred_path = a.out.join("pred.pgm");
    write_label_map(&pred_path, &result.labels)?;
    let mut m = RunManifest::new("predict");
    m.config("classes", model.num_classes())
        .input("model", &a.model)
        .input("image", &a.image);
    if let Some(p) = &a.mask {
        m.input("mask", p);
    }
    m.output("prediction", &pred_path);
    if a.posteriors {
        let post_path = a.out.join("posteriors.psp");
        write_posteriors(
            &post_path,
            &PosteriorRaster {
                width: img.width(),
                height: img.height(),
                num_classes: model.num_classes(),
                values: result.posteriors,
            },
        )?;
        m.output("posteriors", &post_path);
    }
    m.timing("classify", elapsed);
    m.write(&a.out)?;
    Ok(())
}

fn relabel(map: &LabelMap, classes: u8) -> Result<LabelMap> {
    Ok(LabelMap::new(
        map.width(),
        map.height(),
        classes,
        map.labels().to_vec(),
    )?)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    if a.calibration && a.posteriors.is_none() {
        return Err(Error::Usage("--calibration requires --posteriors".into()));
    }
    if a.bins < 2 {
        return Err(Error::Usage("--bins must be at least 2".into()));
    }
    let pred = read_label_map(&a.pred, a.classes)?;
    let reference = read_label_map(&a.reference, a.classes)?;
    let posteriors = a
        .posteriors
        .as_ref()
        .map(|p| read_posteriors(p))
        .transpose()?;
    let classes = a.classes.unwrap_or_else(|| {
        pred.num_classes()
            .max(reference.num_classes())
            .max(posteriors.as_ref().map_or(0, |p| p.num_classes))
    });
    let pred = relabel(&pred, classes)?;
    let reference = relabel(&reference, classes)?;

    let cm = confusion(&pred, &reference)?;
    let report = metrics(&cm)?;
    create_out(&a.out)?;
    let mut m = RunManifest::new("evaluate");
    m.config("classes", classes)
        .config("bins", a.bins)
        .input("prediction", &a.pred)
        .input("reference", &a.reference);
    for (name, text) in [
        ("metrics.txt", metrics_table(&report)),
        ("metrics.kv", metrics_kv(&report)),
        ("confusion.txt", confusion_table(&cm)),
    ] {
        let path = a.out.join(name);
        write_text(&path, &text)?;
        m.output(name, &path);
    }
    if let (Some(post), Some(post_path)) = (&posteriors, &a.posteriors) {
        m.input("posteriors", post_path);
        if post.num_classes != classes || post.width != pred.width() || post.height != pred.height()
        {
            return Err(Error::Usage(format!(
                "posterior raster is {}x{}x{}, prediction is {}x{}x{classes}",
                post.width,
                post.height,
                post.num_classes,
                pred.width(),
                pred.height()
            )));
        }
        let hist = entropy_histogram(&post.values, classes, a.bins)?;
        let path = a.out.join("entropy_hist.csv");
        write_text(&path, &entropy_csv(&hist))?;
        m.output("entropy_hist.csv", &path);
        if a.calibration {
            let curve = calibration_curve(&post.values, &pred, &reference, a.bins)?;
            let path = a.out.join("calibration.csv");
            write_text(&path, &calibration_csv(&curve))?;
            m.output("calibration.csv", &path);
        }
    }
    m.write(&a.out)?;
    Ok(())
}

pub fn cmd_crossval(a: &CrossvalArgs) -> Result<()> {
    let cfg = CrossvalConfig {
        folds: a.folds,
        repeats: a.repeats,
        fit: a.fit.to_config(),
    };
    validate_fit_config(&cfg.fit)?;
    if cfg.folds < 2 || cfg.repeats < 1 {
        cfg.validate(usize::MAX)?;
    }
    let img = load_image(&a.image)?;
    let labels = load_labels(&a.labels, a.classes, &img)?;
    let start = Instant::now();
    let runs = crossval(&img, &labels, &cfg)?;
    let elapsed = start.elapsed();
    let summary = summarize(&runs);

    create_out(&a.out)?;
    let mut m = RunManifest::new("crossval");
    describe_fit(&mut m, &cfg.fit);
    m.config("folds", cfg.folds)
        .config("repeats", cfg.repeats)
        .config("classes", labels.num_classes())
        .input("image", &a.image)
        .input("labels", &a.labels);
    for (name, text) in [
        ("crossval.csv", runs_csv(&runs)),
        ("crossval.kv", summary_kv(&summary)),
        ("crossval.txt", summary_table(&summary, runs.len())),
    ] {
        let path = a.out.join(name);
        write_text(&path, &text)?;
        m.output(name, &path);
    }
    m.timing("crossval", elapsed);
    m.write(&a.out)?;
    Ok(())
}
