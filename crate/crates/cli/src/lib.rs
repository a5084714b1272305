//! `lareval` command line: evaluation, skeletonization, NMS, lengths and
//! synthetic fixtures. [`run`] is the whole program minus process exit.

mod load;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lareval::annotation::{
    ground_truth_to_json, predictions_to_json, read_mask_png, write_mask_png, PredInstance,
};
use lareval::metrics::{evaluate_dataset, nms_indices, IouKind, MatchConfig, MatchingMode, ScoredMask};
use lareval::skeleton::{skeleton_length, skeletonize};
use lareval::synth::{generate_dataset, perturb, PerturbationSpec, SceneConfig};
use lareval::{Error, LengthEstimator, Result};
use serde_json::json;

pub use load::{parse_size, InputFormat};

#[derive(Parser, Debug)]
#[command(name = "lareval", version, about = "Length-aware evaluation of curvilinear instance masks")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Length-aware recall and mask/box AP of predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Thin every instance (or one PNG mask) to a one-pixel skeleton.
    Skeletonize(SkeletonizeArgs),
    /// Greedy non-maximum suppression of predictions, per image.
    Nms(NmsArgs),
    /// Write a synthetic ground truth and matching predictions.
    Synth(SynthArgs),
    /// Skeleton lengths of every ground-truth instance under each estimator.
    Lengths(LengthsArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long, value_enum, default_value = "coco")]
    format: InputFormat,
    /// Image size for YOLO labels, e.g. 512x512.
    #[arg(long, value_parser = parse_size)]
    image_size: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Geodesic,
    Pixel,
    Polyline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatchingArg {
    PaperOrder,
    StrictPaper,
    GlobalGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Level {
    Mask,
    Box,
}

#[derive(Args, Debug)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "geodesic")]
    estimator: EstimatorArg,
    /// Douglas-Peucker tolerance for the polyline estimator, in pixels.
    #[arg(long, default_value_t = 1.5)]
    epsilon: f64,
}

impl EstimatorArgs {
    fn estimator(&self) -> LengthEstimator {
        match self.estimator {
            EstimatorArg::Geodesic => LengthEstimator::GeodesicChain,
            EstimatorArg::Pixel => LengthEstimator::PixelCount,
            EstimatorArg::Polyline => LengthEstimator::PolylineFit { epsilon: self.epsilon },
        }
    }
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.5)]
    iou_thresh: f64,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value = "paper-order")]
    matching: MatchingArg,
    #[arg(long, default_value_t = 0.0)]
    score_thresh: f64,
    /// Report path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    output_format: OutputFormat,
}

#[derive(Args, Debug)]
struct SkeletonizeArgs {
    /// Ground-truth file whose instances are thinned.
    #[arg(long, conflicts_with = "mask", required_unless_present = "mask")]
    gt: Option<PathBuf>,
    /// A single PNG mask.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Output PNG for --mask.
    #[arg(long, requires = "mask")]
    out: Option<PathBuf>,
    /// Directory for one skeleton PNG per instance, named IMAGE_ANNOTATION.png.
    #[arg(long, requires = "gt")]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NmsArgs {
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth, needed to size COCO predictions.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "mask")]
    level: Level,
    /// Output COCO results file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    images: usize,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, value_parser = parse_size, default_value = "512x512")]
    canvas: (usize, usize),
    #[arg(long, default_value_t = 3)]
    width_min: usize,
    #[arg(long, default_value_t = 7)]
    width_max: usize,
    #[arg(long, default_value_t = 80.0)]
    length_min: f64,
    #[arg(long, default_value_t = 200.0)]
    length_max: f64,
    /// Perturbation applied to every prediction: erode:R, dilate:R,
    /// fracture:GAP:POS, shift:DX:DY, drop, duplicate:DELTA.
    #[arg(long, value_parser = parse_perturbation)]
    perturb: Option<PerturbationSpec>,
    /// Also write each ground-truth mask as a PNG.
    #[arg(long)]
    png: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct LengthsArgs {
    #[arg(long)]
    gt: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Douglas-Peucker tolerance for the polyline column.
    #[arg(long, default_value_t = 1.5)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    output_format: OutputFormat,
}

pub fn parse_perturbation(s: &str) -> std::result::Result<PerturbationSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> std::result::Result<f64, String> {
        parts
            .get(i)
            .ok_or_else(|| format!("{s:?}: missing parameter {i}"))?
            .parse::<f64>()
            .map_err(|_| format!("{s:?}: parameter {i} is not a number"))
    };
    let int = |i: usize| -> std::result::Result<i64, String> {
        parts
            .get(i)
            .ok_or_else(|| format!("{s:?}: missing parameter {i}"))?
            .parse::<i64>()
            .map_err(|_| format!("{s:?}: parameter {i} is not an integer"))
    };
    let radius = |i: usize| int(i).and_then(|r| usize::try_from(r).map_err(|_| format!("{s:?}: negative radius")));
    let (spec, arity) = match parts[0] {
        "erode" => (PerturbationSpec::Erode { radius: radius(1)? }, 2),
        "dilate" => (PerturbationSpec::Dilate { radius: radius(1)? }, 2),
        "fracture" => (
            PerturbationSpec::Fracture {
                gap_px: num(1)?,
                position_fraction: num(2)?,
            },
            3,
        ),
        "shift" => (PerturbationSpec::Shift { dx: int(1)?, dy: int(2)? }, 3),
        "drop" => (PerturbationSpec::Drop, 1),
        "duplicate" => (PerturbationSpec::Duplicate { score_delta: num(1)? }, 2),
        other => return Err(format!("unknown perturbation {other:?}")),
    };
    if parts.len() != arity {
        return Err(format!("{s:?}: expected {} parameters", arity - 1));
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Runs the program on `argv` (including the program name) and returns the
/// exit code: 0 on success, 1 for bad input or usage, 2 for internal errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| dispatch(cli)));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
        Err(_) => {
            eprintln!("error: internal failure (panic)");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::Skeletonize(a) => skeletonize_cmd(a),
        Command::Nms(a) => nms(a),
        Command::Synth(a) => synth(a),
        Command::Lengths(a) => lengths(a),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn report_diagnostics(diagnostics: &[String]) {
    for d in diagnostics {
        eprintln!("warning: {d}");
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let config = MatchConfig {
        iou_threshold: a.iou_thresh,
        matching_mode: match a.matching {
            MatchingArg::PaperOrder => MatchingMode::PaperOrder,
            MatchingArg::StrictPaper => MatchingMode::StrictPaper,
            MatchingArg::GlobalGreedy => MatchingMode::GlobalGreedy,
        },
        estimator: a.estimator.estimator(),
        score_threshold: a.score_thresh,
    };
    config.validate()?;
    let mut diagnostics = Vec::new();
    let gt = load::load_ground_truth(a.input.format, &a.gt, a.input.image_size, &mut diagnostics)?;
    let preds = load::load_predictions(a.input.format, &a.pred, &gt.descriptor, &mut diagnostics)?;
    report_diagnostics(&diagnostics);
    let report = evaluate_dataset(&gt.descriptor, &gt.instances, &preds, &config)?;
    report_diagnostics(&report.diagnostics);
    let text = match a.output_format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    emit(a.out.as_deref(), &text)
}

fn skeletonize_cmd(a: SkeletonizeArgs) -> Result<()> {
    if let Some(mask_path) = a.mask {
        let mask = read_mask_png(&mask_path)?;
        let s = skeletonize(&mask);
        let out = a
            .out
            .ok_or_else(|| Error::Range("--out is required with --mask".into()))?;
        write_mask_png(&s.mask, &out)?;
        eprintln!("{} -> {} skeleton pixels", mask_path.display(), s.mask.area());
        return Ok(());
    }
    let gt_path = a.gt.expect("clap enforces --gt or --mask");
    let out_dir = a
        .out_dir
        .ok_or_else(|| Error::Range("--out-dir is required with --gt".into()))?;
    let mut diagnostics = Vec::new();
    let gt = load::load_ground_truth(a.input.format, &gt_path, a.input.image_size, &mut diagnostics)?;
    report_diagnostics(&diagnostics);
    create_dir(&out_dir)?;
    for inst in &gt.instances {
        let img = gt.descriptor.image(inst.image_id).expect("loader checks image ids");
        let s = skeletonize(&inst.geometry.rasterize(img.width, img.height)?);
        write_mask_png(&s.mask, out_dir.join(format!("{}_{}.png", inst.image_id, inst.annotation_id)))?;
    }
    Ok(())
}

fn nms(a: NmsArgs) -> Result<()> {
    if !(a.threshold > 0.0 && a.threshold <= 1.0) {
        return Err(Error::Range(format!("nms threshold must be in (0, 1], got {}", a.threshold)));
    }
    let mut diagnostics = Vec::new();
    let (descriptor, preds) =
        load::load_predictions_alone(a.input.format, &a.pred, a.gt.as_deref(), a.input.image_size, &mut diagnostics)?;
    report_diagnostics(&diagnostics);
    let level = match a.level {
        Level::Mask => IouKind::Mask,
        Level::Box => IouKind::Box,
    };
    let mut by_image: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, p) in preds.iter().enumerate() {
        let slot = descriptor
            .images
            .iter()
            .position(|i| i.image_id == p.image_id)
            .ok_or(Error::Reference {
                kind: "image",
                id: p.image_id,
            })?;
        by_image.entry(slot).or_default().push(k);
    }
    let mut kept: Vec<PredInstance> = Vec::new();
    for (slot, members) in by_image {
        let img = &descriptor.images[slot];
        let scored = members
            .iter()
            .map(|&k| Ok(ScoredMask::new(preds[k].geometry.rasterize(img.width, img.height)?, preds[k].score)))
            .collect::<Result<Vec<_>>>()?;
        for i in nms_indices(&scored, a.threshold, level)? {
            kept.push(preds[members[i]].clone());
        }
    }
    eprintln!("kept {} of {} predictions", kept.len(), preds.len());
    emit(a.out.as_deref(), &pretty(&predictions_to_json(&kept)))
}

fn synth(a: SynthArgs) -> Result<()> {
    let config = SceneConfig {
        n_instances: a.instances,
        canvas: a.canvas,
        width_range: (a.width_min, a.width_max),
        length_range: (a.length_min, a.length_max),
    };
    let data = generate_dataset(a.seed, a.images, &config)?;
    let spec = a.perturb.unwrap_or(PerturbationSpec::Shift { dx: 0, dy: 0 });
    let mut preds = Vec::new();
    for inst in data.instances() {
        let p = perturb(inst, &spec)?;
        if let Some(d) = p.diagnostic {
            eprintln!("warning: {d}");
        }
        preds.extend(p.predictions);
    }
    create_dir(&a.out_dir)?;
    let gt_instances = data.gt_instances();
    write_file(&a.out_dir.join("gt.json"), &pretty(&ground_truth_to_json(&data.descriptor, &gt_instances)))?;
    write_file(&a.out_dir.join("pred.json"), &pretty(&predictions_to_json(&preds)))?;
    let lengths: Vec<serde_json::Value> = data
        .instances()
        .map(|i| {
            json!({
                "image_id": i.gt.image_id,
                "gt_id": i.gt.annotation_id,
                "width": i.width,
                "analytic_length": i.analytic_length,
                "control_points": i.spec.control_points,
            })
        })
        .collect();
    let meta = json!({
        "seed": a.seed,
        "config": config,
        "perturbation": spec,
        "instances": lengths,
    });
    write_file(&a.out_dir.join("lengths.json"), &pretty(&meta))?;
    if a.png {
        for inst in data.instances() {
            write_mask_png(&inst.mask, a.out_dir.join(format!("{}_{}.png", inst.gt.image_id, inst.gt.annotation_id)))?;
        }
    }
    eprintln!(
        "wrote {} images, {} ground-truth instances, {} predictions to {}",
        data.scenes.len(),
        gt_instances.len(),
        preds.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn lengths(a: LengthsArgs) -> Result<()> {
    let polyline = LengthEstimator::PolylineFit { epsilon: a.epsilon };
    polyline.validate()?;
    let mut diagnostics = Vec::new();
    let gt = load::load_ground_truth(a.input.format, &a.gt, a.input.image_size, &mut diagnostics)?;
    report_diagnostics(&diagnostics);
    let mut rows = Vec::with_capacity(gt.instances.len());
    for inst in &gt.instances {
        let img = gt.descriptor.image(inst.image_id).expect("loader checks image ids");
        let mask = inst.geometry.rasterize(img.width, img.height)?;
        let s = skeletonize(&mask);
        rows.push((
            inst.image_id,
            inst.annotation_id,
            mask.area(),
            skeleton_length(&s, LengthEstimator::PixelCount),
            skeleton_length(&s, LengthEstimator::GeodesicChain),
            skeleton_length(&s, polyline),
        ));
    }
    let text = match a.output_format {
        OutputFormat::Json => pretty(&json!({
            "polyline_epsilon": a.epsilon,
            "instances": rows.iter().map(|r| json!({
                "image_id": r.0,
                "gt_id": r.1,
                "area": r.2,
                "pixel_count": r.3,
                "geodesic_chain": r.4,
                "polyline_fit": r.5,
            })).collect::<Vec<_>>(),
        })),
        OutputFormat::Csv => {
            let mut s = String::from("image_id,gt_id,area,pixel_count,geodesic_chain,polyline_fit\n");
            for r in &rows {
                s.push_str(&format!("{},{},{},{},{},{}\n", r.0, r.1, r.2, r.3, r.4, r.5));
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)
}
