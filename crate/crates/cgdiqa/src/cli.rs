//! Command-line interface: batch scoring, manifest evaluation, and the
//! synthetic degradation utilities.
//!
//! Batch work fans out to a bounded rayon pool; results are buffered and
//! emitted in input order so output is byte-identical regardless of the
//! worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::degrade::{gaussian_blur, make_test_page, BlurSpec};
use crate::eval::{evaluate, DatasetManifest, Engine, EvalReport};
use crate::imgio::{self, save_pgm};
use crate::mser::{CharacterPatch, MserParams, Polarity};
use crate::scoring::{score_image, QualityScore, DEFAULT_DOWNSAMPLE_LIMIT};
use crate::Result;

#[derive(Parser)]
#[command(
    name = "cgdiqa",
    about = "No-reference document image quality scoring from character gradients",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score document images; one JSON/CSV record per input on stdout.
    Score(ScoreArgs),
    /// Score all images of a manifest and correlate against OCR accuracies.
    Eval(EvalArgs),
    /// Write Gaussian-blurred copies of an image.
    Degrade(DegradeArgs),
    /// Generate a deterministic synthetic document page.
    GenFixture(GenFixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolarityArg {
    DarkOnLight,
    LightOnDark,
    Both,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Polarity {
        match p {
            PolarityArg::DarkOnLight => Polarity::DarkOnLight,
            PolarityArg::LightOnDark => Polarity::LightOnDark,
            PolarityArg::Both => Polarity::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Detector and preprocessing knobs, shared by `score` and `eval`.
#[derive(Args, Clone)]
struct PipelineFlags {
    /// Gray-level offset for the stability measure.
    #[arg(long, default_value_t = 5)]
    delta: u8,
    /// Maximal region variation v_max.
    #[arg(long = "v-max", default_value_t = 0.2)]
    v_max: f64,
    /// Minimal region area in pixels.
    #[arg(long, default_value_t = 13)]
    min_area: usize,
    /// Maximal region area as a fraction of image pixels.
    #[arg(long = "max-area-frac", default_value_t = 0.001)]
    max_area_frac: f64,
    /// Lower bound on patch width/height ratio.
    #[arg(long, default_value_t = 0.25)]
    min_aspect: f64,
    /// Upper bound on patch width/height ratio.
    #[arg(long, default_value_t = 4.0)]
    max_aspect: f64,
    #[arg(long, value_enum, default_value_t = PolarityArg::DarkOnLight)]
    polarity: PolarityArg,
    /// Images whose longest side exceeds this are downsampled to it.
    #[arg(long, default_value_t = DEFAULT_DOWNSAMPLE_LIMIT)]
    downsample_limit: usize,
    /// Worker threads; 0 picks the machine default.
    #[arg(long, env = "CGDIQA_WORKERS", default_value_t = 0)]
    workers: usize,
}

impl PipelineFlags {
    fn params(&self) -> MserParams {
        MserParams {
            delta: self.delta,
            max_variation: self.v_max,
            min_area: self.min_area,
            max_area_fraction: self.max_area_frac,
            min_aspect: self.min_aspect,
            max_aspect: self.max_aspect,
            polarity: self.polarity.into(),
        }
    }

    fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .expect("thread pool")
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Image files (PGM or PNG) to score.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write per-image patch CSVs and annotated PGMs into this directory.
    #[arg(long)]
    dump_patches: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV manifest: image_path,doc_id,acc_finereader,acc_tesseract,acc_omnipage.
    manifest: PathBuf,
    /// OCR engine whose accuracy to correlate against; `all` emits four reports.
    #[arg(long, default_value = "average")]
    engine: String,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct DegradeArgs {
    /// Source image.
    input: PathBuf,
    /// Blur levels; each writes `<stem>_sigma<s>.pgm`.
    #[arg(long = "sigma", required = true)]
    sigmas: Vec<f64>,
    /// Output directory (defaults to the input's directory).
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GenFixtureArgs {
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output PGM path.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ScoreRecord<'a> {
    path: &'a str,
    score: f64,
    patch_count: usize,
    pixel_count: usize,
    mean_gradient: f64,
    degenerate: bool,
}

impl<'a> ScoreRecord<'a> {
    fn new(path: &'a str, s: &QualityScore) -> Self {
        ScoreRecord {
            path,
            score: s.value,
            patch_count: s.patch_count,
            pixel_count: s.pixel_count,
            mean_gradient: s.mean_gradient,
            degenerate: s.degenerate,
        }
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Score(args) => cmd_score(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Degrade(args) => cmd_degrade(&args),
        Command::GenFixture(args) => cmd_gen_fixture(&args),
    };
    match code {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn score_one(
    path: &Path,
    params: &MserParams,
    limit: usize,
) -> Result<(QualityScore, Vec<CharacterPatch>, imgio::GrayImage)> {
    let img = imgio::load_image(path)?;
    let img = imgio::downsample_if_large(img, limit);
    let (score, patches) = score_image(&img, params)?;
    Ok((score, patches, img))
}

fn dump_patches(
    dir: &Path,
    src: &Path,
    img: &imgio::GrayImage,
    patches: &[CharacterPatch],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let stem = src.file_stem().unwrap_or_default().to_string_lossy();
    let csv_path = dir.join(format!("{stem}_boxes.csv"));
    let mut text = String::from("x_min,y_min,x_max,y_max\n");
    for p in patches {
        text.push_str(&format!(
            "{},{},{},{}\n",
            p.bbox.x_min, p.bbox.y_min, p.bbox.x_max, p.bbox.y_max
        ));
    }
    std::fs::write(&csv_path, text).map_err(|e| crate::Error::Io {
        path: csv_path,
        source: e,
    })?;
    let mut annotated = img.clone();
    for p in patches {
        let b = &p.bbox;
        for x in b.x_min..=b.x_max {
            annotated.set(x as usize, b.y_min as usize, 0);
            annotated.set(x as usize, b.y_max as usize, 0);
        }
        for y in b.y_min..=b.y_max {
            annotated.set(b.x_min as usize, y as usize, 0);
            annotated.set(b.x_max as usize, y as usize, 0);
        }
    }
    save_pgm(&annotated, &dir.join(format!("{stem}_boxes.pgm")))
}

fn cmd_score(args: &ScoreArgs) -> Result<i32> {
    let params = args.pipeline.params();
    params.validate()?;
    let limit = args.pipeline.downsample_limit;
    let pool = args.pipeline.pool();
    let results: Vec<Result<(QualityScore, Vec<CharacterPatch>, imgio::GrayImage)>> =
        pool.install(|| {
            args.paths
                .par_iter()
                .map(|p| score_one(p, &params, limit))
                .collect()
        });

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.format == Format::Csv {
        writeln!(
            out,
            "path,score,patch_count,pixel_count,mean_gradient,degenerate"
        )
        .ok();
    }
    let mut failed = false;
    for (path, result) in args.paths.iter().zip(results) {
        let display = path.to_string_lossy();
        match result {
            Ok((score, patches, img)) => {
                match args.format {
                    Format::Json => {
                        let rec = ScoreRecord::new(&display, &score);
                        writeln!(out, "{}", serde_json::to_string(&rec).unwrap()).ok();
                    }
                    Format::Csv => {
                        writeln!(
                            out,
                            "{display},{},{},{},{},{}",
                            score.value,
                            score.patch_count,
                            score.pixel_count,
                            score.mean_gradient,
                            score.degenerate
                        )
                        .ok();
                    }
                }
                if let Some(dir) = &args.dump_patches {
                    dump_patches(dir, path, &img, &patches)?;
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                failed = true;
            }
        }
    }
    Ok(if failed { 2 } else { 0 })
}

fn parse_engines(name: &str) -> Result<Vec<Engine>> {
    match name {
        "finereader" => Ok(vec![Engine::FineReader]),
        "tesseract" => Ok(vec![Engine::Tesseract]),
        "omnipage" => Ok(vec![Engine::Omnipage]),
        "average" => Ok(vec![Engine::Average]),
        "all" => Ok(Engine::ALL.to_vec()),
        other => Err(crate::Error::Contract(format!(
            "unknown engine {other:?} (finereader|tesseract|omnipage|average|all)"
        ))),
    }
}

fn write_reports_csv(out: &mut impl Write, reports: &[EvalReport]) {
    writeln!(out, "kind,engine,doc_id,lcc,srocc").ok();
    for r in reports {
        let engine = r.engine.name();
        for (doc, c) in &r.per_doc {
            writeln!(out, "doc,{engine},{doc},{},{}", c.lcc, c.srocc).ok();
        }
        for doc in &r.excluded_docs {
            writeln!(out, "excluded,{engine},{doc},,").ok();
        }
        writeln!(out, "median,{engine},,{},{}", r.median_lcc, r.median_srocc).ok();
        writeln!(out, "global,{engine},,{},{}", r.global_lcc, r.global_srocc).ok();
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let engines = parse_engines(&args.engine)?;
    let params = args.pipeline.params();
    params.validate()?;
    let manifest = DatasetManifest::from_path(&args.manifest)?;
    let base = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    // image paths are resolved relative to the manifest's directory
    let mut unique: Vec<&str> = manifest
        .rows
        .iter()
        .map(|r| r.image_path.as_str())
        .collect();
    unique.sort();
    unique.dedup();

    let limit = args.pipeline.downsample_limit;
    let pool = args.pipeline.pool();
    let scored: Vec<(String, Result<QualityScore>)> = pool.install(|| {
        unique
            .par_iter()
            .map(|rel| {
                let path = base.join(rel);
                let score = crate::scoring::score_document(&path, &params, limit);
                (rel.to_string(), score)
            })
            .collect()
    });
    let mut scores = BTreeMap::new();
    for (rel, result) in scored {
        scores.insert(rel, result?.value);
    }

    let reports: Vec<EvalReport> = engines
        .into_iter()
        .map(|e| evaluate(&manifest, &scores, e))
        .collect::<Result<_>>()?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match args.format {
        Format::Json => {
            if reports.len() == 1 {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&reports[0]).unwrap()
                )
                .ok();
            } else {
                writeln!(out, "{}", serde_json::to_string_pretty(&reports).unwrap()).ok();
            }
        }
        Format::Csv => write_reports_csv(&mut out, &reports),
    }
    Ok(0)
}

/// Format a sigma for filenames: `2` not `2.0`, `1.5` stays `1.5`.
fn sigma_label(sigma: f64) -> String {
    if sigma.fract() == 0.0 {
        format!("{}", sigma as i64)
    } else {
        format!("{sigma}")
    }
}

fn cmd_degrade(args: &DegradeArgs) -> Result<i32> {
    let img = imgio::load_image(&args.input)?;
    let out_dir = args.out_dir.clone().unwrap_or_else(|| {
        args.input
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    });
    std::fs::create_dir_all(&out_dir).map_err(|e| crate::Error::Io {
        path: out_dir.clone(),
        source: e,
    })?;
    let stem = args
        .input
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .to_string();
    for &sigma in &args.sigmas {
        if sigma < 0.0 {
            return Err(crate::Error::Contract("sigma must be >= 0".into()));
        }
        let blurred = gaussian_blur(&img, &BlurSpec::new(sigma));
        let path = out_dir.join(format!("{stem}_sigma{}.pgm", sigma_label(sigma)));
        save_pgm(&blurred, &path)?;
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_gen_fixture(args: &GenFixtureArgs) -> Result<i32> {
    let page = make_test_page(args.width, args.height, args.seed);
    save_pgm(&page, &args.out)?;
    println!("{}", args.out.display());
    Ok(0)
}
