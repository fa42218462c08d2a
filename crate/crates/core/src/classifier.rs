//! Linear soft-margin SVMs combined into a one-vs-one ECOC classifier.
//!
//! Each binary problem is solved in the dual with SMO using second-order
//! working-set selection on a precomputed linear Gram matrix; the primal
//! weights are recovered as `w = Σ αᵢ yᵢ xᵢ` and the bias from the free
//! support vectors. Multiclass prediction uses loss-based decoding with
//! the hinge loss `ℓ(z) = max(0, 1 − z)/2`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

pub type Label = i64;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Soft-margin penalty.
    pub c: f64,
    /// Maximal KKT violation accepted at convergence.
    pub tolerance: f64,
    /// SMO iteration cap per binary problem; `None` means
    /// `10 · n_samples · n_classes`.
    pub max_iterations: Option<usize>,
    /// Recorded for reproducibility. SMO with deterministic working-set
    /// selection does not shuffle, so the seed does not alter the result.
    pub seed: u64,
    /// Standardize each feature dimension with training mean and deviation.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: None,
            seed: 0,
            standardize: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::invalid(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryModel<T> {
    pub weights: Vec<T>,
    pub bias: T,
    /// `(negative, positive)` class labels.
    pub pair: (Label, Label),
    /// `½‖w‖² + C·Σ hinge` at the returned solution.
    pub train_objective: T,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Scalar> SvmBinaryModel<T> {
    /// Signed margin `w·x + b`; positive favours `pair.1`.
    pub fn decision(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "feature length {} does not match model dimension {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

pub fn predict_binary<T: Scalar>(model: &SvmBinaryModel<T>, x: &[T]) -> Result<T> {
    model.decision(x)
}

fn check_features<T: Scalar>(features: &[Vec<T>], n_labels: usize) -> Result<usize> {
    if features.len() != n_labels {
        return Err(Error::invalid(format!(
            "{} feature vectors but {n_labels} labels",
            features.len()
        )));
    }
    let d = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("no training samples"))?;
    if let Some((i, f)) = features.iter().enumerate().find(|(_, f)| f.len() != d) {
        return Err(Error::invalid(format!(
            "sample {i} has {} features, expected {d}",
            f.len()
        )));
    }
    Ok(d)
}

/// Trains a binary SVM on labels in `{−1, +1}`; the model's pair is `(-1, 1)`.
pub fn train_binary_svm<T: Scalar>(
    features: &[Vec<T>],
    labels: &[i8],
    config: &TrainConfig,
) -> Result<SvmBinaryModel<T>> {
    config.validate()?;
    check_features(features, labels.len())?;
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::invalid("binary labels must be -1 or +1"));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::invalid("binary training needs samples of both labels"));
    }
    let refs: Vec<&[T]> = features.iter().map(Vec::as_slice).collect();
    let max_iter = config.max_iterations.unwrap_or(10 * labels.len() * 2);
    Ok(smo(&refs, labels, config, max_iter, (-1, 1)))
}

const TAU: f64 = 1e-12;

fn smo<T: Scalar>(
    x: &[&[T]],
    y: &[i8],
    config: &TrainConfig,
    max_iter: usize,
    pair: (Label, Label),
) -> SvmBinaryModel<T> {
    let n = x.len();
    let d = x[0].len();
    let c = T::of(config.c);
    let eps = T::of(config.tolerance);
    let tau = T::of(TAU);
    let yf: Vec<T> = y.iter().map(|&v| if v > 0 { T::one() } else { -T::one() }).collect();

    let mut kernel = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let k = dot(x[i], x[j]);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let q = |i: usize, j: usize| yf[i] * yf[j] * kernel[i * n + j];

    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let mut converged = false;
    let mut iterations = 0;

    let in_up = |a: T, yi: T| (yi > T::zero() && a < c) || (yi < T::zero() && a > T::zero());
    let in_low = |a: T, yi: T| (yi < T::zero() && a < c) || (yi > T::zero() && a > T::zero());

    while iterations < max_iter {
        let mut g_max = -T::infinity();
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], yf[t]) {
                let v = -yf[t] * grad[t];
                if v > g_max {
                    g_max = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        let mut g_min = T::infinity();
        let mut obj_min = T::infinity();
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(alpha[t], yf[t]) {
                continue;
            }
            let v = -yf[t] * grad[t];
            g_min = g_min.min(v);
            let b = g_max - v;
            if b > T::zero() {
                let mut a = kernel[i * n + i] + kernel[t * n + t] - T::of(2.0) * kernel[i * n + t];
                if a <= T::zero() {
                    a = tau;
                }
                let obj = -(b * b) / a;
                if obj < obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        if g_max - g_min < eps {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        if yf[i] != yf[j] {
            let mut quad = qii + qjj + T::of(2.0) * qij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] = alpha[i] + delta;
            alpha[j] = alpha[j] + delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > T::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - T::of(2.0) * qij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] = alpha[i] - delta;
            alpha[j] = alpha[j] + delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < T::zero() {
                alpha[j] = T::zero();
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g = *g + q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias: average over free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (T::infinity(), -T::infinity());
    let (mut sum_free, mut n_free) = (T::zero(), 0usize);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if alpha[t] >= c {
            if yf[t] < T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= T::zero() {
            if yf[t] > T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free = sum_free + yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / T::of_usize(n_free)
    } else {
        (ub + lb) / T::of(2.0)
    };

    let mut weights = vec![T::zero(); d];
    for t in 0..n {
        if alpha[t] != T::zero() {
            let coef = alpha[t] * yf[t];
            for (w, &xv) in weights.iter_mut().zip(x[t]) {
                *w = *w + coef * xv;
            }
        }
    }
    let bias = -rho;
    let hinge: T = (0..n)
        .map(|t| (T::one() - yf[t] * (dot(&weights, x[t]) + bias)).max(T::zero()))
        .sum();
    let train_objective = T::of(0.5) * dot(&weights, &weights) + c * hinge;
    SvmBinaryModel {
        weights,
        bias,
        pair,
        train_objective,
        converged,
        iterations,
    }
}

/// Per-dimension affine map `(x − mean) / scale` fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(features: &[Vec<T>]) -> Self {
        let d = features[0].len();
        let n = T::of_usize(features.len());
        let mut mean = vec![T::zero(); d];
        for f in features {
            for (m, &v) in mean.iter_mut().zip(f) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); d];
        for f in features {
            for ((s, &v), &m) in var.iter_mut().zip(f).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::zero() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }
}

/// One-vs-one ensemble with its code matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel<T> {
    pub format_version: u32,
    pub classes: Vec<Label>,
    pub feature_dim: usize,
    /// `K × K(K−1)/2`; column for pair `(i, j)` is −1 at row `i`, +1 at row `j`.
    pub coding: Vec<Vec<i8>>,
    pub models: Vec<SvmBinaryModel<T>>,
    pub train_config: TrainConfig,
    pub standardization: Option<Standardizer<T>>,
}

/// Class index pairs `(i, j)`, `i < j`, in model order.
pub fn class_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
}

pub fn ovo_coding(k: usize) -> Vec<Vec<i8>> {
    let pairs = class_pairs(k);
    let mut coding = vec![vec![0i8; pairs.len()]; k];
    for (col, &(i, j)) in pairs.iter().enumerate() {
        coding[i][col] = -1;
        coding[j][col] = 1;
    }
    coding
}

/// Trains one binary SVM per class pair (class `i` → −1, class `j` → +1)
/// on the samples of those two classes only. Pairs train in parallel.
pub fn train_ovo_ecoc<T: Scalar>(
    features: &[Vec<T>],
    labels: &[Label],
    config: &TrainConfig,
) -> Result<EcocModel<T>> {
    config.validate()?;
    let d = check_features(features, labels.len())?;
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 classes, got {}",
            classes.len()
        )));
    }
    let standardization = config.standardize.then(|| Standardizer::fit(features));
    let prepared: Vec<Vec<T>> = match &standardization {
        Some(s) => features.iter().map(|f| s.apply(f)).collect(),
        None => features.to_vec(),
    };
    let class_index: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();

    let k = classes.len();
    let models = class_pairs(k)
        .into_par_iter()
        .map(|(ci, cj)| {
            let mut xs: Vec<&[T]> = Vec::new();
            let mut ys: Vec<i8> = Vec::new();
            for (f, &idx) in prepared.iter().zip(&class_index) {
                if idx == ci || idx == cj {
                    xs.push(f);
                    ys.push(if idx == cj { 1 } else { -1 });
                }
            }
            let max_iter = config.max_iterations.unwrap_or(10 * xs.len() * k);
            smo(&xs, &ys, config, max_iter, (classes[ci], classes[cj]))
        })
        .collect();

    Ok(EcocModel {
        format_version: FORMAT_VERSION,
        coding: ovo_coding(k),
        classes,
        feature_dim: d,
        models,
        train_config: *config,
        standardization,
    })
}

/// Hinge decoding loss `max(0, 1 − z) / 2`.
#[inline]
pub fn decoding_loss<T: Scalar>(z: T) -> T {
    (T::one() - z).max(T::zero()) * T::of(0.5)
}

impl<T: Scalar> EcocModel<T> {
    pub fn binary_scores(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.feature_dim {
            return Err(Error::invalid(format!(
                "feature length {} does not match model dimension {}",
                x.len(),
                self.feature_dim
            )));
        }
        let prepared;
        let x = match &self.standardization {
            Some(s) => {
                prepared = s.apply(x);
                prepared.as_slice()
            }
            None => x,
        };
        self.models.iter().map(|m| m.decision(x)).collect()
    }

    /// Decoding loss per class, in `classes` order.
    pub fn class_losses(&self, x: &[T]) -> Result<Vec<T>> {
        let scores = self.binary_scores(x)?;
        Ok(decode_losses(&self.coding, &scores))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported model format_version {}", model.format_version),
            ));
        }
        let k = model.classes.len();
        if model.models.len() != k * (k - 1) / 2 || model.coding.len() != k {
            return Err(Error::format(path, "model/coding sizes do not match class count"));
        }
        Ok(model)
    }
}

/// Loss-based decoding: `loss[k] = Σ_c ℓ(coding[k][c] · scores[c])` over
/// non-zero code entries.
pub fn decode_losses<T: Scalar>(coding: &[Vec<i8>], scores: &[T]) -> Vec<T> {
    coding
        .iter()
        .map(|row| {
            row.iter()
                .zip(scores)
                .filter(|(&code, _)| code != 0)
                .map(|(&code, &s)| decoding_loss(T::of(code as f64) * s))
                .sum()
        })
        .collect()
}

/// Index of the smallest loss; the first index wins ties.
pub fn argmin_first<T: Scalar>(losses: &[T]) -> usize {
    let mut best = 0;
    for (k, &l) in losses.iter().enumerate() {
        if l < losses[best] {
            best = k;
        }
    }
    best
}

pub fn predict_multiclass<T: Scalar>(model: &EcocModel<T>, x: &[T]) -> Result<Label> {
    let losses = model.class_losses(x)?;
    Ok(model.classes[argmin_first(&losses)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hard_margin() -> TrainConfig {
        TrainConfig {
            c: 1e6,
            tolerance: 1e-6,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn symmetric_pair_gives_unit_weight() {
        let x: Vec<Vec<f64>> = vec![vec![-1.0], vec![1.0]];
        let m = train_binary_svm(&x, &[-1, 1], &hard_margin()).unwrap();
        assert!((m.weights[0] - 1.0).abs() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
        assert!(m.converged);
        assert!((predict_binary(&m, &[0.0]).unwrap() - m.bias).abs() < 1e-15);

        let fixed = SvmBinaryModel {
            weights: vec![1.0],
            bias: 0.0,
            pair: (-1, 1),
            train_objective: 0.0,
            converged: true,
            iterations: 0,
        };
        assert_eq!(predict_binary(&fixed, &[2.0]).unwrap(), 2.0);
        assert!(predict_binary(&fixed, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn duplicated_data_same_hyperplane() {
        let x: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![1.0, 2.0], vec![3.0, 0.0], vec![4.0, 1.5]];
        let y = [-1i8, -1, 1, 1];
        let base = train_binary_svm(&x, &y, &hard_margin()).unwrap();
        let mut xk = Vec::new();
        let mut yk = Vec::new();
        for _ in 0..3 {
            xk.extend(x.iter().cloned());
            yk.extend_from_slice(&y);
        }
        let dup = train_binary_svm(&xk, &yk, &hard_margin()).unwrap();
        for (a, b) in base.weights.iter().zip(&dup.weights) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!((base.bias - dup.bias).abs() < 1e-4);
    }

    #[test]
    fn binary_input_errors() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train_binary_svm(&x, &[1, 1], &TrainConfig::default()).is_err());
        assert!(train_binary_svm(&[vec![1.0], vec![2.0, 3.0]], &[1, -1], &TrainConfig::default()).is_err());
        assert!(train_binary_svm(&x, &[1, 0], &TrainConfig::default()).is_err());
        let bad = TrainConfig { c: 0.0, ..TrainConfig::default() };
        assert!(train_binary_svm(&x, &[1, -1], &bad).is_err());
    }

    #[test]
    fn coding_structure() {
        let coding = ovo_coding(4);
        let pairs = class_pairs(4);
        assert_eq!(pairs.len(), 6);
        for (col, &(i, j)) in pairs.iter().enumerate() {
            for (row, code) in coding.iter().enumerate() {
                let expect = if row == i { -1 } else if row == j { 1 } else { 0 };
                assert_eq!(code[col], expect);
            }
        }
    }

    fn clusters(seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let centers = [(0.0, 0.0), (6.0, 0.0), (3.0, 6.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        for (k, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..20 {
                xs.push(vec![cx + rng.gen_range(-1.0..1.0), cy + rng.gen_range(-1.0..1.0)]);
                ls.push(k as Label * 10);
            }
        }
        (xs, ls)
    }

    #[test]
    fn three_clusters_fit_perfectly() {
        let (xs, ls) = clusters(5);
        // the clusters are separable: nearest-centroid classifies every point
        let centroid = |k: Label| {
            let pts: Vec<&Vec<f64>> = xs.iter().zip(&ls).filter(|(_, &l)| l == k).map(|(x, _)| x).collect();
            let n = pts.len() as f64;
            (pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n)
        };
        let cents: Vec<(Label, (f64, f64))> = [0, 10, 20].iter().map(|&k| (k, centroid(k))).collect();
        for (x, &l) in xs.iter().zip(&ls) {
            let nearest = cents
                .iter()
                .min_by(|a, b| {
                    let da = (x[0] - a.1 .0).powi(2) + (x[1] - a.1 .1).powi(2);
                    let db = (x[0] - b.1 .0).powi(2) + (x[1] - b.1 .1).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
                .0;
            assert_eq!(nearest, l);
        }

        let model = train_ovo_ecoc(&xs, &ls, &TrainConfig::default()).unwrap();
        assert_eq!(model.models.len(), 3);
        assert_eq!(model.classes, vec![0, 10, 20]);
        for (x, &l) in xs.iter().zip(&ls) {
            assert_eq!(predict_multiclass(&model, x).unwrap(), l);
        }
        assert!(predict_multiclass(&model, &[1.0]).is_err());
    }

    #[test]
    fn two_class_ecoc_matches_binary() {
        let x = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![3.0]];
        let labels = [4, 4, 9, 9];
        let model = train_ovo_ecoc(&x, &labels, &TrainConfig::default()).unwrap();
        assert_eq!(model.models.len(), 1);
        let bin = train_binary_svm(&x, &[-1, -1, 1, 1], &TrainConfig::default()).unwrap();
        for probe in [-3.0, -0.5, 0.2, 5.0] {
            let s = predict_binary(&bin, &[probe]).unwrap();
            let expect = if s > 0.0 { 9 } else { 4 };
            assert_eq!(predict_multiclass(&model, &[probe]).unwrap(), expect);
        }
    }

    #[test]
    fn ten_classes_give_45_models() {
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        for k in 0..10 {
            for r in 0..3 {
                xs.push(vec![k as f64 * 3.0 + r as f64 * 0.1, (k % 3) as f64]);
                ls.push(k);
            }
        }
        let model = train_ovo_ecoc(&xs, &ls, &TrainConfig::default()).unwrap();
        assert_eq!(model.models.len(), 45);
        assert_eq!(model.coding.len(), 10);
        assert!(model.coding.iter().all(|r| r.len() == 45));
    }

    #[test]
    fn ecoc_needs_two_classes() {
        let xs = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_ovo_ecoc(&xs, &[3, 3], &TrainConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_scores_tie_to_first_class() {
        let coding = ovo_coding(3);
        let losses = decode_losses(&coding, &[0.0f64, 0.0, 0.0]);
        assert_eq!(losses, vec![1.0, 1.0, 1.0]);
        assert_eq!(argmin_first(&losses), 0);
    }

    #[test]
    fn decoding_invariant_under_column_permutation() {
        let coding = ovo_coding(4);
        let scores = [0.3, -1.2, 2.0, -0.1, 0.7, -2.5];
        let base = decode_losses(&coding, &scores);
        let perm = [4, 2, 0, 5, 1, 3];
        let pc: Vec<Vec<i8>> = coding.iter().map(|row| perm.iter().map(|&p| row[p]).collect()).collect();
        let ps: Vec<f64> = perm.iter().map(|&p| scores[p]).collect();
        let permuted = decode_losses(&pc, &ps);
        for (a, b) in base.iter().zip(&permuted) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(argmin_first(&base), argmin_first(&permuted));
    }

    #[test]
    fn retraining_is_bit_identical_and_serializes() {
        let (xs, ls) = clusters(9);
        let cfg = TrainConfig { standardize: true, seed: 3, ..TrainConfig::default() };
        let a = train_ovo_ecoc(&xs, &ls, &cfg).unwrap();
        let b = train_ovo_ecoc(&xs, &ls, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        a.save(&path).unwrap();
        let back = EcocModel::<f64>::load(&path).unwrap();
        assert_eq!(back, a);
        for x in &xs {
            assert_eq!(predict_multiclass(&back, x).unwrap(), predict_multiclass(&a, x).unwrap());
        }
    }

    #[test]
    fn works_in_single_precision() {
        let (xs, ls) = clusters(2);
        let xs32: Vec<Vec<f32>> = xs.iter().map(|x| x.iter().map(|&v| v as f32).collect()).collect();
        let model = train_ovo_ecoc(&xs32, &ls, &TrainConfig::default()).unwrap();
        let correct = xs32
            .iter()
            .zip(&ls)
            .filter(|(x, &l)| predict_multiclass(&model, x).unwrap() == l)
            .count();
        assert_eq!(correct, xs32.len());
    }
}
