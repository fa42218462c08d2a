//! Datasets, the repeated hold-out protocol and its reports.
//!
//! One run of the protocol draws a fresh Bernoulli matrix and a fresh
//! stratified split, measures every segment, trains the one-vs-one
//! classifier on the training part and tallies a confusion matrix on the
//! test part. Run `r` uses matrix seed `base + 2r` and split seed
//! `base + 2r + 1`.

mod glyphs;
mod metrics;

pub use glyphs::{DIGITS, GLYPH_SIZE};
pub use metrics::{metrics_from_confusion, ClassMetrics, ConfusionMatrix};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{predict_multiclass, train_ovo_ecoc, Label, TrainConfig};
use crate::error::{Error, Result};
use crate::imaging::{
    binarize_majority, flatten, read_gray, resample_binary, write_binary_pgm, BinaryImage, Segment,
    DEFAULT_SEGMENT_SIZE,
};
use crate::scalar::Scalar;
use crate::sensing::{bernoulli_matrix, measure};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub items: Vec<(Segment, Label)>,
    /// Sorted, distinct.
    pub classes: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(Segment, Label)>) -> Self {
        let mut classes: Vec<Label> = items.iter().map(|(_, l)| *l).collect();
        classes.sort_unstable();
        classes.dedup();
        LabeledDataset { items, classes }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Side length of the (square) segments; errors on mixed sizes.
    pub fn segment_size(&self) -> Result<usize> {
        let first = self
            .items
            .first()
            .ok_or_else(|| Error::invalid("dataset is empty"))?
            .0
            .size();
        if self.items.iter().any(|(s, _)| s.size() != first || s.image.height() != first) {
            return Err(Error::invalid("dataset segments have mixed sizes"));
        }
        Ok(first)
    }

    pub fn count_of(&self, label: Label) -> usize {
        self.items.iter().filter(|(_, l)| *l == label).count()
    }

    /// Writes `<root>/<label>/<label>_<index>.pgm`, the layout read by [`load_dataset`].
    pub fn write_to(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        let mut next_index = std::collections::BTreeMap::<Label, usize>::new();
        for (seg, label) in &self.items {
            let dir = root.join(label.to_string());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let idx = next_index.entry(*label).or_default();
            write_binary_pgm(dir.join(format!("{label}_{idx:04}.pgm")), &seg.image)?;
            *idx += 1;
        }
        Ok(())
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
}

/// Reads a directory with one sub-directory per integer class label.
///
/// Each image is thresholded at 0.5 with the minority side as ink, then
/// resampled as a whole to `size×size` (no cropping). Items are ordered by
/// label, then file name.
pub fn load_dataset(root: impl AsRef<Path>, size: usize) -> Result<LabeledDataset> {
    let root = root.as_ref();
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut class_dirs: Vec<(Label, std::path::PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let label: Label = name
            .parse()
            .map_err(|_| Error::format(&path, "class directory name is not an integer label"))?;
        class_dirs.push((label, path));
    }
    class_dirs.sort();

    let mut items = Vec::new();
    for (label, dir) in &class_dirs {
        let mut files: Vec<std::path::PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        files.sort();
        for file in files {
            items.push((load_glyph(&file, size)?, *label));
        }
    }
    if items.is_empty() {
        return Err(Error::format(root, "no class directories with PGM/PNG images"));
    }
    Ok(LabeledDataset::new(items))
}

/// One glyph image read the way [`load_dataset`] reads its files.
pub fn load_glyph(path: impl AsRef<Path>, size: usize) -> Result<Segment> {
    if size == 0 {
        return Err(Error::invalid("segment size must be at least 1"));
    }
    let gray = read_gray(path)?;
    let bin = binarize_majority(&gray);
    Segment::from_image(resample_binary(&bin, size, size))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub per_class: usize,
    pub seed: u64,
    pub shift_max: usize,
    pub noise_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            per_class: 101,
            seed: 0,
            shift_max: 2,
            noise_rate: 0.02,
        }
    }
}

/// Renders digits 0–9 from the embedded glyphs with a random integer shift
/// in `[−shift_max, shift_max]²` (pixels leaving the canvas are dropped)
/// and independent pixel flips with probability `noise_rate`.
pub fn synth_digits(params: &SynthParams) -> Result<LabeledDataset> {
    if params.per_class == 0 {
        return Err(Error::invalid("per_class must be at least 1"));
    }
    if !(0.0..=1.0).contains(&params.noise_rate) {
        return Err(Error::invalid(format!(
            "noise rate {} outside [0,1]",
            params.noise_rate
        )));
    }
    let glyphs: Vec<BinaryImage> = DIGITS
        .iter()
        .map(|rows| BinaryImage::from_ascii(rows))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let s = GLYPH_SIZE as isize;
    let k = params.shift_max as isize;
    let mut items = Vec::with_capacity(10 * params.per_class);
    for (digit, glyph) in glyphs.iter().enumerate() {
        for _ in 0..params.per_class {
            let dy = rng.gen_range(-k..=k);
            let dx = rng.gen_range(-k..=k);
            let mut img = BinaryImage::zeros(GLYPH_SIZE, GLYPH_SIZE);
            for r in 0..s {
                for c in 0..s {
                    let (sr, sc) = (r - dy, c - dx);
                    let ink = sr >= 0 && sc >= 0 && sr < s && sc < s && glyph.get(sr as usize, sc as usize) == 1;
                    let flip = params.noise_rate > 0.0 && rng.gen_bool(params.noise_rate);
                    img.set(r as usize, c as usize, ink != flip);
                }
            }
            items.push((Segment::from_image(img)?, digit as Label));
        }
    }
    Ok(LabeledDataset::new(items))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

/// `round(fraction · n)` with halves rounded up.
pub fn train_count(fraction: f64, n: usize) -> usize {
    // the epsilon absorbs representation error, e.g. 0.7·5 = 3.4999…
    (fraction * n as f64 + 0.5 + 1e-9).floor() as usize
}

/// Indices of the training and test items, each in ascending order.
pub fn split_indices(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<(Option<Label>, Vec<usize>)> = if spec.stratified {
        ds.classes
            .iter()
            .map(|&c| {
                let idx = (0..ds.len()).filter(|&i| ds.items[i].1 == c).collect();
                (Some(c), idx)
            })
            .collect()
    } else {
        vec![(None, (0..ds.len()).collect())]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in groups {
        let n_train = train_count(spec.train_fraction, idx.len());
        if n_train == 0 || n_train >= idx.len() {
            let what = label.map_or("dataset".to_string(), |l| format!("class {l}"));
            return Err(Error::invalid(format!(
                "{what} with {} samples cannot be split at fraction {} into non-empty halves",
                idx.len(),
                spec.train_fraction
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = split_indices(ds, spec)?;
    let pick = |idx: &[usize]| LabeledDataset::new(idx.iter().map(|&i| ds.items[i].clone()).collect());
    Ok((pick(&train), pick(&test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
}

fn featurize<T: Scalar>(ds: &LabeledDataset, m: usize, matrix_seed: u64) -> Result<Vec<Vec<T>>> {
    let n = ds.segment_size()?.pow(2);
    let a = bernoulli_matrix::<T>(m, n, matrix_seed)?;
    ds.items
        .iter()
        .map(|(seg, _)| measure(&a, &flatten::<T>(seg)).map(|f| f.values))
        .collect()
}

fn train_and_score<T: Scalar>(
    ds: &LabeledDataset,
    features: &[Vec<T>],
    train: &[usize],
    test: &[usize],
    config: &TrainConfig,
) -> Result<EvalOutcome> {
    if ds.classes.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 classes, got {}",
            ds.classes.len()
        )));
    }
    let xs: Vec<Vec<T>> = train.iter().map(|&i| features[i].clone()).collect();
    let ys: Vec<Label> = train.iter().map(|&i| ds.items[i].1).collect();
    let model = train_ovo_ecoc(&xs, &ys, config)?;
    let mut confusion = ConfusionMatrix::new(ds.classes.clone());
    for &i in test {
        confusion.record(ds.items[i].1, predict_multiclass(&model, &features[i])?)?;
    }
    let accuracy = 100.0 * confusion.trace() as f64 / confusion.total().max(1) as f64;
    Ok(EvalOutcome { confusion, accuracy })
}

/// One hold-out run: measure, split, train, test.
pub fn evaluate_once<T: Scalar>(
    ds: &LabeledDataset,
    m: usize,
    matrix_seed: u64,
    split_spec: &SplitSpec,
    config: &TrainConfig,
) -> Result<EvalOutcome> {
    let features = featurize::<T>(ds, m, matrix_seed)?;
    let (train, test) = split_indices(ds, split_spec)?;
    train_and_score(ds, &features, &train, &test, config)
}

/// Trains and scores on the whole dataset (a resubstitution sanity check).
pub fn evaluate_on_training_set<T: Scalar>(
    ds: &LabeledDataset,
    m: usize,
    matrix_seed: u64,
    config: &TrainConfig,
) -> Result<EvalOutcome> {
    let features = featurize::<T>(ds, m, matrix_seed)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    train_and_score(ds, &features, &all, &all, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub m: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    pub stratified: bool,
    pub train: TrainConfig,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            m: 64,
            runs: 20,
            base_seed: 0,
            train_fraction: 0.8,
            stratified: true,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub samples: usize,
    pub classes: Vec<Label>,
    pub segment_size: usize,
    pub params: ExperimentParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub runs: usize,
    pub per_run_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    /// Unweighted mean over runs of each run's per-class percentages.
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<ConfusionMatrix>,
    pub config_echo: ConfigEcho,
}

impl RunReport {
    /// `label,precision,recall,f1` rows followed by accuracy footer rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,precision,recall,f1\n");
        for c in &self.per_class {
            let _ = writeln!(out, "{},{:.4},{:.4},{:.4}", c.label, c.precision, c.recall, c.f1);
        }
        let _ = writeln!(out, "mean_accuracy,{:.4}", self.mean_accuracy);
        let _ = writeln!(out, "min_accuracy,{:.4}", self.min_accuracy);
        let _ = writeln!(out, "max_accuracy,{:.4}", self.max_accuracy);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the protocol `params.runs` times on up to `jobs` threads. The
/// report does not depend on `jobs`.
pub fn repeated_eval<T: Scalar>(
    ds: &LabeledDataset,
    params: &ExperimentParams,
    dataset_name: &str,
    jobs: usize,
) -> Result<RunReport> {
    if params.runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    if params.m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let segment_size = ds.segment_size()?;
    let run = |r: usize| {
        let matrix_seed = params.base_seed.wrapping_add(2 * r as u64);
        let split_spec = SplitSpec {
            train_fraction: params.train_fraction,
            seed: matrix_seed.wrapping_add(1),
            stratified: params.stratified,
        };
        evaluate_once::<T>(ds, params.m, matrix_seed, &split_spec, &params.train)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<EvalOutcome> =
        pool.install(|| (0..params.runs).into_par_iter().map(run).collect::<Result<_>>())?;

    let per_run_accuracy: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let runs = outcomes.len();
    let mean_accuracy = per_run_accuracy.iter().sum::<f64>() / runs as f64;
    let min_accuracy = per_run_accuracy.iter().copied().fold(f64::INFINITY, f64::min);
    let max_accuracy = per_run_accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut per_class: Vec<ClassMetrics> = ds
        .classes
        .iter()
        .map(|&label| ClassMetrics {
            label,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            degenerate: false,
        })
        .collect();
    for o in &outcomes {
        let (metrics, _) = metrics_from_confusion(&o.confusion)?;
        for (acc, m) in per_class.iter_mut().zip(metrics) {
            acc.precision += m.precision;
            acc.recall += m.recall;
            acc.f1 += m.f1;
            acc.degenerate |= m.degenerate;
        }
    }
    for c in &mut per_class {
        c.precision /= runs as f64;
        c.recall /= runs as f64;
        c.f1 /= runs as f64;
    }

    Ok(RunReport {
        runs,
        per_run_accuracy,
        mean_accuracy,
        min_accuracy,
        max_accuracy,
        per_class,
        confusion: outcomes.into_iter().map(|o| o.confusion).collect(),
        config_echo: ConfigEcho {
            dataset: dataset_name.to_string(),
            samples: ds.len(),
            classes: ds.classes.clone(),
            segment_size,
            params: params.clone(),
        },
    })
}

pub const DEFAULT_SIZE: usize = DEFAULT_SEGMENT_SIZE;

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(per_class: usize) -> LabeledDataset {
        synth_digits(&SynthParams {
            per_class,
            seed: 1,
            shift_max: 0,
            noise_rate: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn synth_sizes_and_determinism() {
        let p = SynthParams { per_class: 101, seed: 4, ..SynthParams::default() };
        let a = synth_digits(&p).unwrap();
        assert_eq!(a.len(), 1010);
        assert_eq!(a.classes, (0..10).collect::<Vec<_>>());
        assert!(a.classes.iter().all(|&c| a.count_of(c) == 101));
        assert_eq!(a, synth_digits(&p).unwrap());
        assert_ne!(a, synth_digits(&SynthParams { seed: 5, ..p }).unwrap());
        assert!(synth_digits(&SynthParams { per_class: 0, ..p }).is_err());
    }

    #[test]
    fn noiseless_synth_reproduces_glyphs() {
        let ds = clean(3);
        for (seg, label) in &ds.items {
            let glyph = BinaryImage::from_ascii(&DIGITS[*label as usize]).unwrap();
            assert_eq!(seg.image, glyph);
        }
    }

    #[test]
    fn glyphs_are_distinct_and_light() {
        let glyphs: Vec<BinaryImage> = DIGITS.iter().map(|g| BinaryImage::from_ascii(g).unwrap()).collect();
        for (i, g) in glyphs.iter().enumerate() {
            assert!(g.count_foreground() * 2 < GLYPH_SIZE * GLYPH_SIZE, "digit {i}");
            for h in &glyphs[i + 1..] {
                assert_ne!(g, h);
            }
        }
    }

    #[test]
    fn split_counts_follow_rounding() {
        // round(0.8·101) = round(80.8) = 81
        assert_eq!(train_count(0.8, 101), 81);
        assert_eq!(train_count(0.5, 5), 3);
        assert_eq!(train_count(0.7, 5), 4);
        for n in 1..200 {
            let exact = 0.8 * n as f64;
            let expected = if exact.fract() >= 0.5 - 1e-9 { exact.ceil() } else { exact.floor() };
            assert_eq!(train_count(0.8, n), expected as usize, "n={n}");
        }

        let ds = clean(101);
        let spec = SplitSpec { seed: 9, ..SplitSpec::default() };
        let (train, test) = split(&ds, &spec).unwrap();
        for c in 0..10 {
            assert_eq!(train.count_of(c), 81);
            assert_eq!(test.count_of(c), 20);
        }
        assert_eq!(split(&ds, &spec).unwrap(), (train, test));
    }

    #[test]
    fn split_is_a_partition() {
        let ds = clean(7);
        let (tr, te) = split_indices(&ds, &SplitSpec { seed: 3, ..SplitSpec::default() }).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());

        let unstrat = SplitSpec { stratified: false, ..SplitSpec::default() };
        let (tr, te) = split_indices(&ds, &unstrat).unwrap();
        assert_eq!(tr.len() + te.len(), 70);
        assert_eq!(tr.len(), 56);
    }

    #[test]
    fn infeasible_split_rejected() {
        let ds = clean(2);
        // round(0.8·2) = 2 leaves no test sample
        assert!(matches!(split(&ds, &SplitSpec::default()), Err(Error::InvalidArgument(_))));
        assert!(split(&ds, &SplitSpec { train_fraction: 1.0, ..SplitSpec::default() }).is_err());
        assert!(split(&ds, &SplitSpec { train_fraction: 0.5, ..SplitSpec::default() }).is_ok());
    }

    #[test]
    fn resubstitution_on_clean_glyphs_is_perfect() {
        let ds = clean(4);
        let out = evaluate_on_training_set::<f64>(&ds, 96, 5, &TrainConfig::default()).unwrap();
        assert_eq!(out.accuracy, 100.0);
        assert_eq!(out.confusion.total(), 40);
    }

    #[test]
    fn single_class_fails_at_training() {
        let ds = LabeledDataset::new(clean(5).items.into_iter().filter(|(_, l)| *l == 3).collect());
        assert_eq!(ds.classes, vec![3]);
        let err = evaluate_once::<f64>(&ds, 16, 1, &SplitSpec::default(), &TrainConfig::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn report_layout() {
        let ds = synth_digits(&SynthParams { per_class: 10, seed: 2, ..SynthParams::default() }).unwrap();
        let params = ExperimentParams { m: 32, runs: 2, base_seed: 11, ..ExperimentParams::default() };
        let report = repeated_eval::<f64>(&ds, &params, "synthetic", 2).unwrap();
        assert_eq!(report.runs, 2);
        assert_eq!(report.per_run_accuracy.len(), 2);
        assert!(report.min_accuracy <= report.mean_accuracy && report.mean_accuracy <= report.max_accuracy);
        assert_eq!(report.per_class.len(), 10);
        for cm in &report.confusion {
            assert_eq!(cm.total(), 20);
        }
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,precision,recall,f1");
        assert_eq!(lines.len(), 14);
        assert!(lines[13].starts_with("max_accuracy,"));

        let single = ExperimentParams { runs: 1, ..params.clone() };
        let report = repeated_eval::<f64>(&ds, &single, "synthetic", 1).unwrap();
        let once = evaluate_once::<f64>(
            &ds,
            32,
            11,
            &SplitSpec { seed: 12, ..SplitSpec::default() },
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(report.per_run_accuracy, vec![once.accuracy]);
        assert_eq!(report.confusion, vec![once.confusion]);
    }

    #[test]
    fn dataset_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth_digits(&SynthParams { per_class: 3, seed: 8, ..SynthParams::default() }).unwrap();
        ds.write_to(dir.path()).unwrap();
        std::fs::write(dir.path().join("README"), "not a class").unwrap();
        std::fs::write(dir.path().join("4").join("notes.txt"), "skip me").unwrap();
        let back = load_dataset(dir.path(), 16).unwrap();
        assert_eq!(back, ds);

        let empty = tempfile::tempdir().unwrap();
        let err = load_dataset(empty.path(), 16).unwrap_err();
        assert!(err.to_string().contains(&empty.path().display().to_string()));

        std::fs::create_dir(empty.path().join("letters")).unwrap();
        assert!(load_dataset(empty.path(), 16).is_err());
    }
}
