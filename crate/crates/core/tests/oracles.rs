//! Cross-checks against independently written reference computations.

use csocr::classifier::{train_binary_svm, TrainConfig};
use csocr::evaluation::{metrics_from_confusion, ConfusionMatrix};
use csocr::evaluation::{split_indices, synth_digits, SplitSpec, SynthParams};
use csocr::imaging::{flatten, resample_binary, unflatten, BinaryImage, Segment, SignalVector};
use csocr::reconstruction::{basis_pursuit, l0_bruteforce, tv, BpParams, TvVariant};
use csocr::sensing::{bernoulli_matrix, estimate_ric, measure, FeatureVector};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T_GLYPH: [&str; 8] = [
    "########",
    "########",
    "...##...",
    "...##...",
    "...##...",
    "...##...",
    "...##...",
    "...##...",
];

/// Bilinear interpolation written as a sum of separable tent kernels.
fn tent_resample(src: &[Vec<u8>], out: usize) -> Vec<Vec<u8>> {
    let n = src.len();
    let tent = |d: f64| (1.0 - d.abs()).max(0.0);
    (0..out)
        .map(|r| {
            let sy = ((r as f64 + 0.5) * n as f64 / out as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            (0..out)
                .map(|c| {
                    let sx = ((c as f64 + 0.5) * n as f64 / out as f64 - 0.5).clamp(0.0, (n - 1) as f64);
                    let mut v = 0.0;
                    for (i, row) in src.iter().enumerate() {
                        for (j, &p) in row.iter().enumerate() {
                            v += p as f64 * tent(sy - i as f64) * tent(sx - j as f64);
                        }
                    }
                    u8::from(v >= 0.5)
                })
                .collect()
        })
        .collect()
}

#[test]
fn resampled_t_glyph_matches_tent_oracle() {
    let src: Vec<Vec<u8>> = T_GLYPH
        .iter()
        .map(|r| r.bytes().map(|b| u8::from(b == b'#')).collect())
        .collect();
    let expected = tent_resample(&src, 16);
    let got = resample_binary(&BinaryImage::from_ascii(&T_GLYPH).unwrap(), 16, 16);
    for (r, row) in expected.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            assert_eq!(got.get(r, c), v, "pixel ({r},{c})");
        }
    }
    // bar rows 0..4 and stem columns 6..10 after doubling
    assert_eq!(got.count_foreground(), 4 * 16 + 12 * 4);
}

#[test]
fn ric_matches_dense_eigen_sweep() {
    for seed in 0..5 {
        let a = bernoulli_matrix::<f64>(4, 8, seed).unwrap();
        let est = estimate_ric(&a, 2, 1_000).unwrap();
        assert_eq!(est.support_count, 28);
        let dense = DMatrix::from_row_slice(4, 8, a.entries()) / 2.0;
        let mut delta: f64 = 0.0;
        for i in 0..8 {
            for j in i + 1..8 {
                let sub = dense.select_columns(&[i, j]);
                let eig = SymmetricEigen::new(sub.transpose() * &sub).eigenvalues;
                for &l in eig.iter() {
                    delta = delta.max((l - 1.0).abs());
                }
            }
        }
        assert!((est.delta - delta).abs() < 1e-10, "seed {seed}: {} vs {delta}", est.delta);
    }
}

#[test]
fn ric_two_sided_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let a = bernoulli_matrix::<f64>(6, 8, seed).unwrap();
        let d = estimate_ric(&a, 2, 1_000).unwrap().delta;
        for _ in 0..50 {
            let mut x = vec![0.0; 8];
            let i = rng.gen_range(0..8);
            let j = (i + rng.gen_range(1..8)) % 8;
            x[i] = rng.gen_range(-1.0..1.0);
            x[j] = rng.gen_range(-1.0..1.0);
            let e: f64 = x.iter().map(|v| v * v).sum();
            let ax: f64 = a.apply(&x).iter().map(|v| v * v / 6.0).sum();
            assert!(ax >= (1.0 - d) * e - 1e-12 && ax <= (1.0 + d) * e + 1e-12);
        }
    }
}

/// Soft-margin QP by enumerating which points sit on the margin.
///
/// For a candidate set `S`, the multipliers and bias solve the equalities
/// `y_i (w·x_i + b) = 1` for `i ∈ S` together with `Σ α_i y_i = 0`.
/// Among candidates with `0 ≤ α ≤ C` and all margins at least 1, the one with
/// the smallest `‖w‖` is the optimum.
fn qp_oracle(x: &[[f64; 2]], y: &[f64], c: f64) -> ([f64; 2], f64) {
    let n = x.len();
    let mut best: Option<([f64; 2], f64)> = None;
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if s.len() < 2 {
            continue;
        }
        let k = s.len();
        let mut m = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for (r, &i) in s.iter().enumerate() {
            for (q, &j) in s.iter().enumerate() {
                m[(r, q)] = y[i] * y[j] * (x[i][0] * x[j][0] + x[i][1] * x[j][1]);
            }
            m[(r, k)] = y[i];
            m[(k, r)] = y[i];
            rhs[r] = 1.0;
        }
        let Some(sol) = m.lu().solve(&rhs) else { continue };
        if sol.iter().take(k).any(|&a| a < -1e-12 || a > c + 1e-12) {
            continue;
        }
        let mut w = [0.0; 2];
        for (r, &i) in s.iter().enumerate() {
            w[0] += sol[r] * y[i] * x[i][0];
            w[1] += sol[r] * y[i] * x[i][1];
        }
        let b = sol[k];
        if (0..n).any(|i| y[i] * (w[0] * x[i][0] + w[1] * x[i][1] + b) < 1.0 - 1e-9) {
            continue;
        }
        let norm = w[0].hypot(w[1]);
        if best.is_none_or(|(bw, _)| norm < bw[0].hypot(bw[1]) - 1e-12) {
            best = Some((w, b));
        }
    }
    best.expect("data should be separable")
}

#[test]
fn binary_svm_matches_qp_oracle() {
    let x = [[0.0, 0.0], [0.0, 1.0], [2.0, 0.0], [3.0, 2.0]];
    let y = [-1.0, -1.0, 1.0, 1.0];
    let (w, b) = qp_oracle(&x, &y, 10.0);
    let features: Vec<Vec<f64>> = x.iter().map(|p| p.to_vec()).collect();
    let labels = [-1i8, -1, 1, 1];
    let cfg = TrainConfig {
        c: 10.0,
        tolerance: 1e-6,
        ..TrainConfig::default()
    };
    let model = train_binary_svm(&features, &labels, &cfg).unwrap();
    assert!(model.converged);
    assert!((model.weights[0] - w[0]).abs() < 1e-3, "{:?} vs {w:?}", model.weights);
    assert!((model.weights[1] - w[1]).abs() < 1e-3);
    assert!((model.bias - b).abs() < 1e-3);
    for (p, &l) in features.iter().zip(&labels) {
        assert!(l as f64 * model.decision(p).unwrap() >= 1.0 - 1e-3);
    }
}

#[test]
fn metrics_agree_with_per_sample_tally() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let counts: Vec<Vec<u64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(0..6)).collect()).collect();
        let cm = ConfusionMatrix::from_counts(vec![0, 1, 2], counts.clone()).unwrap();
        let mut samples: Vec<(usize, usize)> = Vec::new();
        for (t, row) in counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                samples.extend(std::iter::repeat_n((t, p), n as usize));
            }
        }
        if samples.is_empty() {
            assert!(metrics_from_confusion(&cm).is_err());
            continue;
        }
        let (per_class, acc) = metrics_from_confusion(&cm).unwrap();
        let correct = samples.iter().filter(|(t, p)| t == p).count();
        assert!((acc - 100.0 * correct as f64 / samples.len() as f64).abs() < 1e-9);
        for (k, m) in per_class.iter().enumerate() {
            let tp = samples.iter().filter(|&&(t, p)| t == k && p == k).count() as f64;
            let pred = samples.iter().filter(|&&(_, p)| p == k).count() as f64;
            let truth = samples.iter().filter(|&&(t, _)| t == k).count() as f64;
            let pr = if pred > 0.0 { 100.0 * tp / pred } else { 0.0 };
            let rc = if truth > 0.0 { 100.0 * tp / truth } else { 0.0 };
            let f1 = if pr + rc > 0.0 { 2.0 * pr * rc / (pr + rc) } else { 0.0 };
            assert!((m.precision - pr).abs() < 1e-9);
            assert!((m.recall - rc).abs() < 1e-9);
            assert!((m.f1 - f1).abs() < 1e-9);
        }
    }
}

fn sparse_signal(rng: &mut ChaCha8Rng, n: usize, s: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let mut placed = 0;
    while placed < s {
        let i = rng.gen_range(0..n);
        if x[i] == 0.0 {
            let mag = rng.gen_range(0.5..2.0);
            x[i] = if rng.gen::<bool>() { mag } else { -mag };
            placed += 1;
        }
    }
    x
}

fn feature(a: &csocr::MeasurementMatrix, x: &[f64]) -> FeatureVector<f64> {
    FeatureVector {
        values: a.apply(x),
        matrix_seed: a.seed(),
        m: a.rows(),
    }
}

#[test]
fn basis_pursuit_agrees_with_l0_on_tiny_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    for trial in 0..20 {
        let a = bernoulli_matrix::<f64>(8, 12, 100 + trial).unwrap();
        let x = sparse_signal(&mut rng, 12, 1);
        let y = feature(&a, &x);
        let l0 = l0_bruteforce(&a, &y, 2, 1e-8, 1_000).unwrap();
        let bp = basis_pursuit(&a, &y, &BpParams::default()).unwrap();
        assert!(l0.converged);
        let diff: f64 = l0.x_hat.iter().zip(&bp.x_hat).map(|(p, q)| (p - q).powi(2)).sum();
        agree += usize::from(diff.sqrt() < 1e-4);
    }
    assert!(agree >= 18, "{agree}/20");
}

#[test]
fn basis_pursuit_is_feasible_and_no_worse_than_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..10 {
        let a = bernoulli_matrix::<f64>(20, 40, trial).unwrap();
        let x = sparse_signal(&mut rng, 40, 8);
        let y = feature(&a, &x);
        let bp = basis_pursuit(&a, &y, &BpParams::default()).unwrap();
        let ynorm: f64 = y.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(bp.residual <= 1e-6 * (1.0 + ynorm));
        let l1_true: f64 = x.iter().map(|v| v.abs()).sum();
        let l1_bp: f64 = bp.x_hat.iter().map(|v| v.abs()).sum();
        assert!(l1_bp <= l1_true * (1.0 + 1e-4), "trial {trial}: {l1_bp} > {l1_true}");
    }
}

fn image_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 36)
}

proptest! {
    #[test]
    fn tv_is_positively_homogeneous(x in image_strategy(), alpha in -3.0f64..3.0) {
        for variant in [TvVariant::Isotropic, TvVariant::Anisotropic] {
            let sx = SignalVector::new(x.clone(), (6, 6)).unwrap();
            let scaled = SignalVector::new(x.iter().map(|v| alpha * v).collect(), (6, 6)).unwrap();
            let lhs = tv(&scaled, variant);
            let rhs = alpha.abs() * tv(&sx, variant);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
        }
    }

    #[test]
    fn tv_ignores_constant_offset(x in image_strategy(), c in -5.0f64..5.0) {
        let sx = SignalVector::new(x.clone(), (6, 6)).unwrap();
        let shifted = SignalVector::new(x.iter().map(|v| v + c).collect(), (6, 6)).unwrap();
        prop_assert!((tv(&sx, TvVariant::Isotropic) - tv(&shifted, TvVariant::Isotropic)).abs() < 1e-9);
    }

    #[test]
    fn isotropic_tv_never_exceeds_anisotropic(x in image_strategy()) {
        let sx = SignalVector::new(x, (6, 6)).unwrap();
        let iso = tv(&sx, TvVariant::Isotropic);
        let aniso = tv(&sx, TvVariant::Anisotropic);
        prop_assert!(iso <= aniso + 1e-12);
        prop_assert!(aniso <= iso * std::f64::consts::SQRT_2 + 1e-12);
    }

    #[test]
    fn flatten_round_trips(bits in prop::collection::vec(any::<bool>(), 64)) {
        let pixels: Vec<u8> = bits.iter().map(|&b| u8::from(b)).collect();
        let img = BinaryImage::new(8, 8, pixels).unwrap();
        let seg = Segment::from_image(img.clone()).unwrap();
        let sig = flatten::<f64>(&seg);
        prop_assert_eq!(sig.values.iter().filter(|&&v| v == 1.0).count(), img.count_foreground());
        prop_assert_eq!(unflatten(&sig), img);
    }

    #[test]
    fn measurement_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let m = bernoulli_matrix::<f64>(5, 9, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let comb: Vec<f64> = x.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
        let lhs = measure(&m, &SignalVector::from_vec(comb)).unwrap().values;
        let (mx, mz) = (m.apply(&x), m.apply(&z));
        for i in 0..5 {
            prop_assert!((lhs[i] - (a * mx[i] + b * mz[i])).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn split_partitions_each_class(seed in any::<u64>(), frac in 0.3f64..0.9) {
        let ds = synth_digits(&SynthParams { per_class: 7, seed, shift_max: 1, noise_rate: 0.01 }).unwrap();
        let spec = SplitSpec { train_fraction: frac, seed, stratified: true };
        let (train, test) = split_indices(&ds, &spec).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        let want = ((frac * 7.0) + 0.5 + 1e-9).floor() as usize;
        for label in 0..10 {
            let n = train.iter().filter(|&&i| ds.items[i].1 == label).count();
            prop_assert_eq!(n, want);
        }
    }
}
