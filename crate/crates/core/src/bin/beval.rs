use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use beval_core::imaging::{adjust_intrinsics, apply_resize_crop, plan_resize_crop, RgbImage, ResizeCropPlan, RESAMPLING};
use beval_core::metrics::{assemble_report, Aggregation, EvalReport, ReportMetadata, DEFAULT_THRESHOLD};
use beval_core::pipeline::{
    build_dataset_gt, evaluate, merge_reports, run_pipeline, task_label, DatasetGt, EvalOptions, MissingPolicy,
    PredictionSource, RunConfig,
};
use beval_core::pointcloud::{
    compute_stats_with_bin, read_cloud, subsample_with_meta, write_cloud, CloudStats, SectorGridSpec, SubsampleMeta,
    ThetaRange, DEFAULT_HIST_BIN,
};
use beval_core::synth::{generate, DrivableLayout, SynthConfig, SynthProfile};
use beval_core::{load_manifest, Error, GridSpec, Intrinsics, Result, SemanticClass};

/// Cross-dataset BEV evaluation toolkit. Every flag can also be set through
/// a `BEVAL_<FLAG>` environment variable (e.g. `BEVAL_JOBS=4`).
#[derive(Parser)]
#[command(name = "beval", version, about)]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, env = "BEVAL_JOBS")]
    jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a manifest.
    Synth(SynthArgs),
    /// Sector-subsample every `.bin` cloud under a directory.
    Subsample(SubsampleArgs),
    /// Point-count statistics over every `.bin` cloud under a directory.
    Stats(StatsArgs),
    /// Resize and center-crop camera images, writing adjusted intrinsics.
    HarmonizeImages(HarmonizeArgs),
    /// Build BEV ground-truth grids for a manifest.
    GenGt(GenGtArgs),
    /// Score predictions against generated ground truth.
    Eval(EvalArgs),
    /// Merge baseline and cross-dataset reports into tables.
    Report(ReportArgs),
    /// Run a full evaluation described by a TOML config.
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, env = "BEVAL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "BEVAL_SAMPLES", default_value_t = 50)]
    samples: usize,
    /// nuscenes-like or wovenplanet-like.
    #[arg(long, env = "BEVAL_PROFILE")]
    profile: SynthProfile,
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
    /// Road layout override.
    #[arg(long, env = "BEVAL_LAYOUT", value_parser = ["cross", "ring", "grid"])]
    layout: Option<String>,
    /// Number of cameras to render (0 to 6).
    #[arg(long, env = "BEVAL_CAMERAS")]
    cameras: Option<usize>,
}

#[derive(Args)]
struct SubsampleArgs {
    #[arg(long = "in", env = "BEVAL_IN")]
    input: PathBuf,
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
    #[arg(long, env = "BEVAL_THETA_SECTORS", default_value_t = 32)]
    theta_sectors: u32,
    #[arg(long, env = "BEVAL_PHI_SECTORS", default_value_t = 1500)]
    phi_sectors: u32,
    /// Fixed elevation range `min,max` in degrees; by default each cloud's
    /// observed range is used.
    #[arg(long, env = "BEVAL_THETA_RANGE", value_parser = parse_range)]
    theta_range: Option<(f64, f64)>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in", env = "BEVAL_IN")]
    input: PathBuf,
    #[arg(long, env = "BEVAL_HIST_BIN", default_value_t = DEFAULT_HIST_BIN)]
    hist_bin: u64,
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct HarmonizeArgs {
    /// A dataset directory with `manifest.json`, or any directory of PNGs.
    #[arg(long = "in", env = "BEVAL_IN")]
    input: PathBuf,
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
    /// Output size as HEIGHTxWIDTH.
    #[arg(long, env = "BEVAL_TARGET", default_value = "128x352", value_parser = parse_size)]
    target: (u32, u32),
}

#[derive(Args)]
struct GridArgs {
    /// Grid side length in meters.
    #[arg(long, env = "BEVAL_EXTENT", default_value_t = 100.0)]
    extent: f64,
    /// Cell size in meters.
    #[arg(long, env = "BEVAL_RESOLUTION", default_value_t = 0.5)]
    resolution: f64,
}

#[derive(Args)]
struct GenGtArgs {
    #[arg(long, env = "BEVAL_MANIFEST")]
    manifest: PathBuf,
    #[arg(long, env = "BEVAL_CLASSES", default_value = "vehicle,human,drivable", value_parser = parse_classes)]
    classes: ClassList,
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory written by `gen-gt`.
    #[arg(long, env = "BEVAL_GT")]
    gt: PathBuf,
    /// Prediction directory, or builtin:oracle|zeros|ones|noisy:<p>:<seed>.
    #[arg(long, env = "BEVAL_PRED")]
    pred: String,
    /// Defaults to every class in the ground truth.
    #[arg(long, env = "BEVAL_CLASSES", value_parser = parse_classes)]
    classes: Option<ClassList>,
    /// Report JSON path.
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
    #[arg(long, env = "BEVAL_MODEL", default_value = "model")]
    model: String,
    /// Defaults to the class names joined with `+`.
    #[arg(long, env = "BEVAL_TASK")]
    task: Option<String>,
    /// Training dataset label; defaults to the test dataset (a baseline).
    #[arg(long, env = "BEVAL_TRAIN")]
    train: Option<String>,
    /// Test dataset label; defaults to the ground truth's dataset id.
    #[arg(long, env = "BEVAL_TEST")]
    test: Option<String>,
    #[arg(long, env = "BEVAL_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    threshold: f32,
    /// Average per-sample IoUs instead of pooling counts over the dataset.
    #[arg(long, env = "BEVAL_PER_SAMPLE_MEAN")]
    per_sample_mean: bool,
    #[arg(long, env = "BEVAL_MISSING", default_value = "fail", value_parser = parse_missing)]
    missing: MissingPolicy,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, env = "BEVAL_BASELINES")]
    baselines: PathBuf,
    /// Cross-dataset report(s); may be repeated.
    #[arg(long, env = "BEVAL_CROSS")]
    cross: Vec<PathBuf>,
    /// Markdown path; `.csv`, `.json` and `_bars.csv` siblings are written too.
    #[arg(long, env = "BEVAL_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, env = "BEVAL_CONFIG")]
    config: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected min,max")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or("expected HEIGHTxWIDTH")?;
    Ok((h.parse().map_err(|e| format!("{e}"))?, w.parse().map_err(|e| format!("{e}"))?))
}

/// Comma-separated class names.
#[derive(Clone)]
struct ClassList(Vec<SemanticClass>);

fn parse_classes(s: &str) -> Result<ClassList> {
    SemanticClass::parse_list(s).map(ClassList)
}

fn parse_missing(s: &str) -> std::result::Result<MissingPolicy, String> {
    match s {
        "fail" => Ok(MissingPolicy::Fail),
        "skip" => Ok(MissingPolicy::Skip),
        _ => Err("expected fail or skip".into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = ["warn", "info", "debug"][cli.verbose.min(2) as usize];
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BEVAL_LOG", level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    }
    let jobs = cli.jobs.unwrap_or_else(rayon::current_num_threads);
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Subsample(a) => subsample_dir(a),
        Command::Stats(a) => stats(a),
        Command::HarmonizeImages(a) => harmonize(a),
        Command::GenGt(a) => gen_gt(a),
        Command::Eval(a) => eval(a, jobs),
        Command::Report(a) => report(a),
        Command::Run(a) => run(a, cli.jobs),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Files under `dir` with extension `ext`, as sorted relative paths.
fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == ext) {
            out.push(entry.path().strip_prefix(dir).expect("walk stays under root").to_path_buf());
        }
    }
    Ok(out)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::profile(a.profile, a.seed, a.samples);
    if let Some(layout) = a.layout.as_deref() {
        cfg.layout = match layout {
            "cross" => DrivableLayout::Cross,
            "ring" => DrivableLayout::Ring,
            _ => DrivableLayout::Grid,
        };
    }
    if let Some(n) = a.cameras {
        cfg.cameras = n;
    }
    let m = generate(&cfg, &a.out)?;
    println!("wrote {} samples of `{}` to {}", m.samples.len(), m.dataset_id, a.out.display());
    Ok(())
}

fn subsample_dir(a: SubsampleArgs) -> Result<()> {
    let spec = SectorGridSpec {
        theta_sectors: a.theta_sectors,
        phi_sectors: a.phi_sectors,
        theta_range: match a.theta_range {
            Some((lo, hi)) => ThetaRange::Fixed {
                min: lo.to_radians(),
                max: hi.to_radians(),
            },
            None => ThetaRange::Observed,
        },
    };
    spec.validate()?;
    let files = files_with_ext(&a.input, "bin")?;
    if files.is_empty() {
        return Err(Error::EmptyInput("point cloud files"));
    }
    let metas: Vec<(String, SubsampleMeta)> = files
        .par_iter()
        .map(|rel| {
            let cloud = read_cloud(&a.input.join(rel))?;
            let (sub, meta) = subsample_with_meta(&cloud, &spec)?;
            write_cloud(&a.out.join(rel), &sub)?;
            Ok((rel.to_string_lossy().into_owned(), meta))
        })
        .collect::<Result<_>>()?;
    let (before, after) = metas
        .iter()
        .fold((0, 0), |(b, f), (_, m)| (b + m.input_points, f + m.output_points));
    write_json(&a.out.join("subsample_meta.json"), &metas.into_iter().collect::<BTreeMap<_, _>>())?;
    println!("subsampled {} clouds: {before} -> {after} points", files.len());
    Ok(())
}

#[derive(Serialize)]
struct StatsFile {
    #[serde(flatten)]
    stats: CloudStats,
    points_per_file: BTreeMap<String, u64>,
}

fn stats(a: StatsArgs) -> Result<()> {
    let files = files_with_ext(&a.input, "bin")?;
    let counts: Vec<(String, u64)> = files
        .par_iter()
        .map(|rel| Ok((rel.to_string_lossy().into_owned(), read_cloud(&a.input.join(rel))?.len() as u64)))
        .collect::<Result<_>>()?;
    let values: Vec<u64> = counts.iter().map(|c| c.1).collect();
    let stats = compute_stats_with_bin(&values, a.hist_bin)?;
    println!(
        "{} clouds: mean {:.1}, median {:.1}, min {}, max {}",
        stats.count, stats.mean, stats.median, stats.min, stats.max
    );
    write_json(
        &a.out,
        &StatsFile {
            stats,
            points_per_file: counts.into_iter().collect(),
        },
    )
}

#[derive(Serialize)]
struct CalibEntry {
    image: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    camera: Option<String>,
    plan: ResizeCropPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    intrinsics: Option<Intrinsics>,
}

#[derive(Serialize)]
struct CalibFile {
    target_height: u32,
    target_width: u32,
    resampling: &'static str,
    images: Vec<CalibEntry>,
}

fn harmonize(a: HarmonizeArgs) -> Result<()> {
    let manifest_path = a.input.join("manifest.json");
    // (relative image path, sample id, camera name, intrinsics)
    let jobs: Vec<(String, Option<String>, Option<String>, Option<Intrinsics>)> = if manifest_path.is_file() {
        let m = load_manifest(&manifest_path)?;
        m.samples
            .iter()
            .flat_map(|s| {
                s.cameras
                    .iter()
                    .map(|c| (c.image.clone(), Some(s.sample_id.clone()), Some(c.name.clone()), Some(c.intrinsics)))
            })
            .collect()
    } else {
        files_with_ext(&a.input, "png")?
            .into_iter()
            .map(|p| (p.to_string_lossy().into_owned(), None, None, None))
            .collect()
    };
    if jobs.is_empty() {
        return Err(Error::EmptyInput("camera images"));
    }
    let images: Vec<CalibEntry> = jobs
        .into_par_iter()
        .map(|(rel, sample_id, camera, intr)| {
            let img = RgbImage::read_png(&a.input.join(&rel))?;
            let plan = plan_resize_crop((img.width(), img.height()), a.target)?;
            apply_resize_crop(&img, &plan)?.write_png(&a.out.join(&rel))?;
            let intrinsics = intr.map(|k| adjust_intrinsics(&k, &plan)).transpose()?;
            Ok(CalibEntry {
                image: rel,
                sample_id,
                camera,
                plan,
                intrinsics,
            })
        })
        .collect::<Result<_>>()?;
    println!("harmonized {} images to {}x{}", images.len(), a.target.0, a.target.1);
    write_json(
        &a.out.join("calib.json"),
        &CalibFile {
            target_height: a.target.0,
            target_width: a.target.1,
            resampling: RESAMPLING,
            images,
        },
    )
}

fn gen_gt(a: GenGtArgs) -> Result<()> {
    let spec = GridSpec::new(a.grid.extent, a.grid.resolution)?;
    let manifest = load_manifest(&a.manifest)?;
    let gt = build_dataset_gt(&manifest, &spec, &a.classes.0)?;
    gt.write(&a.out)?;
    println!("wrote ground truth for {} samples to {}", gt.grids.len(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs, jobs: usize) -> Result<()> {
    let gt = DatasetGt::read(&a.gt)?;
    let classes = a.classes.map_or_else(|| gt.meta.classes.clone(), |c| c.0);
    let source: PredictionSource = a.pred.parse()?;
    let opts = EvalOptions {
        threshold: a.threshold,
        missing: a.missing,
        jobs,
    };
    let outcome = evaluate(&gt.grids, &source, &classes, &opts)?;
    let test = a.test.unwrap_or_else(|| gt.meta.dataset_id.clone());
    let train = a.train.unwrap_or_else(|| test.clone());
    let task = a.task.unwrap_or_else(|| task_label(&classes));
    let aggregation = if a.per_sample_mean {
        Aggregation::PerSampleMean
    } else {
        Aggregation::Dataset
    };
    let mut metadata = ReportMetadata::new(gt.meta.grid, a.threshold, aggregation, classes);
    metadata.sample_counts.insert(test.clone(), outcome.accumulator.samples());
    let mut report = assemble_report(outcome.measurements(&a.model, &task, &train, &test, aggregation), metadata)?;
    if !outcome.skipped.is_empty() {
        report
            .warnings
            .insert(0, format!("{} samples without predictions skipped", outcome.skipped.len()));
    }
    for c in &report.cells {
        info!("{} {} {}: IoU {:.4}", c.model, c.test, c.class, c.iou);
    }
    report.save(&a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let mut reports = vec![EvalReport::load(&a.baselines)?];
    for p in &a.cross {
        reports.push(EvalReport::load(p)?);
    }
    let merged = merge_reports(&reports)?;
    for path in merged.emit(&a.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(a: RunArgs, jobs: Option<usize>) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    let report = run_pipeline(&cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    for path in report.emit(&cfg.output)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
