//! `csocr`: segmentation, compressive sensing, reconstruction and
//! classification of license-plate digits from the command line.
//!
//! Exit status is 0 on success, 1 on a runtime failure and 2 on a usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use csocr::classifier::{predict_multiclass, train_ovo_ecoc, EcocModel, Label, TrainConfig};
use csocr::evaluation::{
    load_dataset, load_glyph, repeated_eval, synth_digits, ExperimentParams, LabeledDataset,
    RunReport, SynthParams,
};
use csocr::imaging::{
    flatten, normalize_segment, read_gray, segment_components, write_binary_pgm, write_gray_pgm,
    Connectivity, Polarity, Segment, SegmentParams, DEFAULT_MIN_PIXELS, DEFAULT_OFFSET,
    DEFAULT_SEGMENT_SIZE, DEFAULT_WINDOW,
};
use csocr::reconstruction::{
    basis_pursuit, tv_reconstruct, BpParams, ReconstructionReport, TvParams, TvVariant,
};
use csocr::sensing::{
    bernoulli_matrix, features_from_csv, features_to_csv, measure, FeatureRow, FeatureVector,
    MeasurementMatrix,
};
use csocr::{Error, Result, Scalar};

#[derive(Parser)]
#[command(name = "csocr", version, about = "License-plate digit recognition from compressive measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a plate image into normalized character segments.
    Segment(SegmentArgs),
    /// Generate a Bernoulli matrix and optionally measure glyph images with it.
    Sense(SenseArgs),
    /// Recover images from measurement vectors.
    Reconstruct(ReconstructArgs),
    /// Train a one-vs-one SVM ensemble on a feature CSV.
    Train(TrainArgs),
    /// Label feature rows with a trained model.
    Predict(PredictArgs),
    /// Repeated hold-out evaluation of the full pipeline.
    Evaluate(EvaluateArgs),
    /// Write a synthetic digit dataset as a directory of PGM files.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConnectivityArg {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Dark,
    Light,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Tv,
    Bp,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Iso,
    Aniso,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F64,
    F32,
}

#[derive(Args)]
struct SegmentArgs {
    /// Plate image (PGM or PNG).
    input: PathBuf,
    /// Output directory for seg_NNN.pgm and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Side of the local-mean window, odd.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Margin below (or above) the local mean that marks ink.
    #[arg(long, default_value_t = DEFAULT_OFFSET)]
    offset: f64,
    /// Components smaller than this are discarded.
    #[arg(long, default_value_t = DEFAULT_MIN_PIXELS)]
    min_pixels: usize,
    #[arg(long, value_enum, default_value = "8")]
    connectivity: ConnectivityArg,
    /// Ink polarity: dark characters on a light plate, or the reverse.
    #[arg(long, value_enum, default_value = "dark")]
    polarity: PolarityArg,
    /// Side of the square output segments.
    #[arg(long, default_value_t = DEFAULT_SEGMENT_SIZE)]
    size: usize,
}

#[derive(Args)]
struct SenseArgs {
    /// Number of measurements (rows).
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Signal length (columns); must equal size² when images are measured.
    #[arg(long, default_value_t = DEFAULT_SEGMENT_SIZE * DEFAULT_SEGMENT_SIZE)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the matrix CSV.
    #[arg(long)]
    matrix_out: PathBuf,
    /// Labeled dataset directory (one sub-directory per integer label).
    #[arg(long, conflicts_with_all = ["input", "synthetic"])]
    data: Option<PathBuf>,
    /// Unlabeled glyph images, e.g. the output of `segment`.
    #[arg(long, num_args = 1.., conflicts_with = "synthetic")]
    input: Vec<PathBuf>,
    /// Synthetic dataset with this many samples per digit (seeded by --seed).
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long, default_value_t = 2)]
    shift_max: usize,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Where to write the feature CSV; required when something is measured.
    #[arg(long)]
    features_out: Option<PathBuf>,
    /// Side of the glyph raster images are resampled to.
    #[arg(long, default_value_t = DEFAULT_SEGMENT_SIZE)]
    size: usize,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Feature CSV; every row is reconstructed.
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_enum, default_value = "tv")]
    method: Method,
    /// Residual bound for TV; default 1e-3·‖y‖₂.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "iso")]
    tv_variant: VariantArg,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Output directory for recon_NNN.pgm and recon_NNN.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainFlags {
    /// Soft-margin penalty.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// KKT tolerance of the SMO solver.
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    /// SMO iteration cap per pair; default 10·n·K.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Standardize features with the training mean and deviation.
    #[arg(long)]
    standardize: bool,
}

impl TrainFlags {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            c: self.c,
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
            seed,
            standardize: self.standardize,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled feature CSV.
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Predictions CSV (`index,predicted[,truth]`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Synthetic dataset with this many samples per digit.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    synthetic: Option<usize>,
    /// Dataset directory (one sub-directory per integer label).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of measurements per glyph.
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Base seed; run r uses matrix seed seed+2r and split seed seed+2r+1.
    /// Also seeds the synthetic dataset.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    /// Draw the split without per-class stratification.
    #[arg(long)]
    no_stratify: bool,
    #[command(flatten)]
    train: TrainFlags,
    /// Worker threads, default all cores; the report does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 2)]
    shift_max: usize,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long, default_value_t = DEFAULT_SEGMENT_SIZE)]
    size: usize,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    /// Output directory for report.json, report.csv and confusion_NN.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 101)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    shift_max: usize,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(a) => cmd_segment(&a),
        Command::Sense(a) => cmd_sense(&a),
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_segment(a: &SegmentArgs) -> Result<()> {
    let params = SegmentParams {
        window: a.window,
        offset: a.offset,
        polarity: match a.polarity {
            PolarityArg::Dark => Polarity::DarkOnLight,
            PolarityArg::Light => Polarity::LightOnDark,
        },
        connectivity: match a.connectivity {
            ConnectivityArg::Four => Connectivity::Four,
            ConnectivityArg::Eight => Connectivity::Eight,
        },
        min_pixels: a.min_pixels,
        size: a.size,
    };
    let img = read_gray(&a.input)?;
    let comps = segment_components(&img, &params)?;
    create_dir(&a.out)?;
    let mut entries = Vec::with_capacity(comps.len());
    for (i, comp) in comps.iter().enumerate() {
        let seg = normalize_segment(comp, params.size)?;
        let file = format!("seg_{i:03}.pgm");
        write_binary_pgm(a.out.join(&file), &seg.image)?;
        entries.push(json!({
            "file": file,
            "bbox": comp.bbox,
            "pixel_count": comp.pixel_count,
        }));
    }
    let manifest = json!({
        "input": a.input.display().to_string(),
        "size": params.size,
        "segments": entries,
    });
    write_text(&a.out.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    println!("{} segments written to {}", comps.len(), a.out.display());
    Ok(())
}

fn cmd_sense(a: &SenseArgs) -> Result<()> {
    let matrix = bernoulli_matrix::<f64>(a.m, a.n, a.seed)?;
    let items: Option<Vec<(Segment, Option<Label>)>> = if let Some(dir) = &a.data {
        let ds = load_dataset(dir, a.size)?;
        Some(ds.items.into_iter().map(|(s, l)| (s, Some(l))).collect())
    } else if let Some(per_class) = a.synthetic {
        let ds = synth_digits(&SynthParams {
            per_class,
            seed: a.seed,
            shift_max: a.shift_max,
            noise_rate: a.noise,
        })?;
        Some(ds.items.into_iter().map(|(s, l)| (s, Some(l))).collect())
    } else if !a.input.is_empty() {
        let segs = a
            .input
            .iter()
            .map(|p| load_glyph(p, a.size))
            .collect::<Result<Vec<_>>>()?;
        Some(segs.into_iter().map(|s| (s, None)).collect())
    } else {
        None
    };
    if items.is_some() && a.features_out.is_none() {
        return Err(Error::InvalidArgument("--features-out is required when measuring images".into()));
    }
    matrix.save(&a.matrix_out)?;
    let Some(items) = items else {
        println!("{}x{} matrix (seed {}) written to {}", a.m, a.n, a.seed, a.matrix_out.display());
        return Ok(());
    };
    let rows = items
        .iter()
        .map(|(seg, label)| {
            let y = measure(&matrix, &flatten(seg))?;
            Ok(FeatureRow {
                values: y.values,
                label: *label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = a.features_out.as_ref().expect("checked above");
    write_text(out, &features_to_csv(&rows))?;
    println!(
        "{}x{} matrix written to {}; {} feature rows written to {}",
        a.m,
        a.n,
        a.matrix_out.display(),
        rows.len(),
        out.display()
    );
    Ok(())
}

fn square_side(n: usize) -> Result<usize> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(Error::InvalidArgument(format!("signal length {n} is not a square image")));
    }
    Ok(side)
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let matrix = MeasurementMatrix::<f64>::load(&a.matrix)?;
    let rows = features_from_csv::<f64>(&read_text(&a.features)?)?;
    for (i, row) in rows.iter().enumerate() {
        if row.values.len() != matrix.rows() {
            return Err(Error::InvalidArgument(format!(
                "feature row {i} has {} values but the matrix has {} rows",
                row.values.len(),
                matrix.rows()
            )));
        }
    }
    let side = square_side(matrix.cols())?;
    create_dir(&a.out)?;
    let variant = match a.tv_variant {
        VariantArg::Iso => TvVariant::Isotropic,
        VariantArg::Aniso => TvVariant::Anisotropic,
    };
    let mut worst = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        let y = FeatureVector {
            values: row.values.clone(),
            matrix_seed: matrix.seed(),
            m: matrix.rows(),
        };
        let (result, report) = match a.method {
            Method::Tv => {
                let params = TvParams {
                    epsilon: a.epsilon,
                    max_iterations: a.max_iter,
                    variant,
                    ..TvParams::default()
                };
                let r = tv_reconstruct(&matrix, &y, (side, side), &params)?;
                let rep = ReconstructionReport::new("tv", &r, Some(variant));
                (r, rep)
            }
            Method::Bp => {
                let params = BpParams {
                    max_iterations: a.max_iter,
                    ..BpParams::default()
                };
                let r = basis_pursuit(&matrix, &y, &params)?;
                let rep = ReconstructionReport::new("bp", &r, None);
                (r, rep)
            }
        };
        worst = worst.max(result.residual);
        write_gray_pgm(a.out.join(format!("recon_{i:03}.pgm")), side, side, &result.x_hat)?;
        write_text(
            &a.out.join(format!("recon_{i:03}.json")),
            &serde_json::to_string_pretty(&report)?,
        )?;
    }
    println!(
        "{} reconstructions written to {} (max residual {worst:.3e})",
        rows.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let rows = features_from_csv::<f64>(&read_text(&a.features)?)?;
    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let label = row
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("feature row {i} has no label")))?;
        features.push(row.values);
        labels.push(label);
    }
    let model = train_ovo_ecoc(&features, &labels, &a.train.config(a.seed))?;
    model.save(&a.out)?;
    let unconverged = model.models.iter().filter(|m| !m.converged).count();
    println!(
        "{} classes, {} binary models ({unconverged} hit the iteration cap), written to {}",
        model.classes.len(),
        model.models.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = EcocModel::<f64>::load(&a.model)?;
    let rows = features_from_csv::<f64>(&read_text(&a.features)?)?;
    let labeled = rows.iter().all(|r| r.label.is_some());
    let mut out = String::from(if labeled { "index,predicted,truth\n" } else { "index,predicted\n" });
    let mut correct = 0usize;
    for (i, row) in rows.iter().enumerate() {
        let p = predict_multiclass(&model, &row.values)?;
        match row.label.filter(|_| labeled) {
            Some(t) => {
                correct += usize::from(p == t);
                out.push_str(&format!("{i},{p},{t}\n"));
            }
            None => out.push_str(&format!("{i},{p}\n")),
        }
    }
    write_text(&a.out, &out)?;
    if labeled && !rows.is_empty() {
        println!(
            "{} predictions written to {} (accuracy {:.2}%)",
            rows.len(),
            a.out.display(),
            100.0 * correct as f64 / rows.len() as f64
        );
    } else {
        println!("{} predictions written to {}", rows.len(), a.out.display());
    }
    Ok(())
}

fn run_eval<T: Scalar>(ds: &LabeledDataset, params: &ExperimentParams, name: &str, jobs: usize) -> Result<RunReport> {
    repeated_eval::<T>(ds, params, name, jobs)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
    }
    let (ds, name) = match (&a.data, a.synthetic) {
        (Some(dir), _) => (load_dataset(dir, a.size)?, dir.display().to_string()),
        (None, Some(per_class)) => {
            let p = SynthParams {
                per_class,
                seed: a.seed,
                shift_max: a.shift_max,
                noise_rate: a.noise,
            };
            let name = format!(
                "synthetic per_class={} seed={} shift_max={} noise_rate={}",
                p.per_class, p.seed, p.shift_max, p.noise_rate
            );
            (synth_digits(&p)?, name)
        }
        (None, None) => unreachable!("clap requires a dataset source"),
    };
    let params = ExperimentParams {
        m: a.m,
        runs: a.runs,
        base_seed: a.seed,
        train_fraction: a.train_frac,
        stratified: !a.no_stratify,
        train: a.train.config(a.seed),
    };
    let report = match a.precision {
        Precision::F64 => run_eval::<f64>(&ds, &params, &name, jobs)?,
        Precision::F32 => run_eval::<f32>(&ds, &params, &name, jobs)?,
    };
    create_dir(&a.out)?;
    write_text(&a.out.join("report.json"), &report.to_json()?)?;
    write_text(&a.out.join("report.csv"), &report.to_csv())?;
    for (r, cm) in report.confusion.iter().enumerate() {
        write_text(&a.out.join(format!("confusion_{r:02}.csv")), &cm.to_csv())?;
    }
    println!(
        "{} runs, m={}: mean {:.2}%, min {:.2}%, max {:.2}%; reports in {}",
        report.runs,
        a.m,
        report.mean_accuracy,
        report.min_accuracy,
        report.max_accuracy,
        a.out.display()
    );
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let ds = synth_digits(&SynthParams {
        per_class: a.per_class,
        seed: a.seed,
        shift_max: a.shift_max,
        noise_rate: a.noise,
    })?;
    ds.write_to(&a.out)?;
    println!("{} images in {} classes written to {}", ds.len(), ds.classes.len(), a.out.display());
    Ok(())
}
