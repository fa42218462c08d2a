//! Bernoulli measurement matrices and compressive measurements `y = Ax`.
//!
//! Matrices are generated from a ChaCha8 stream seeded with the 64-bit seed
//! (`ChaCha8Rng::seed_from_u64`), one uniformly random `bool` per entry in
//! row-major order (`true` → +1). Exchange between implementations goes
//! through the CSV export, not the generator.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::SignalVector;
use crate::linalg::{binomial, symmetric_eigenvalues, Supports};
use crate::scalar::{dot, Scalar};

/// Constant in the measurement bound when the caller has no better value.
pub const DEFAULT_BOUND_CONSTANT: f64 = 1.0;

/// An `m×n` matrix of ±1 entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix<T> {
    m: usize,
    n: usize,
    entries: Vec<T>,
    seed: u64,
}

impl<T: Scalar> MeasurementMatrix<T> {
    /// Wraps explicit ±1 entries, e.g. from a file or a hand-built fixture.
    pub fn from_entries(m: usize, n: usize, entries: Vec<T>, seed: u64) -> Result<Self> {
        check_shape(m, n)?;
        if entries.len() != m * n {
            return Err(Error::invalid(format!(
                "{} entries for a {m}x{n} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e != T::one() && e != -T::one()) {
            return Err(Error::invalid("measurement matrix entries must be +1 or -1"));
        }
        Ok(MeasurementMatrix { m, n, entries, seed })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.m).map(|i| self.get(i, j)).collect()
    }

    /// `A x` for a raw slice of length `n`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.m).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ r` for a raw slice of length `m`.
    pub fn apply_transpose(&self, r: &[T]) -> Vec<T> {
        debug_assert_eq!(r.len(), self.m);
        let mut out = vec![T::zero(); self.n];
        for (i, &ri) in r.iter().enumerate() {
            if ri == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * ri;
            }
        }
        out
    }

    /// Converts to another scalar type; entries stay exactly ±1.
    pub fn cast<U: Scalar>(&self) -> MeasurementMatrix<U> {
        MeasurementMatrix {
            m: self.m,
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|&e| if e > T::zero() { U::one() } else { -U::one() })
                .collect(),
            seed: self.seed,
        }
    }

    /// CSV text: a `# bernoulli m=.. N=.. seed=..` header, then one line of
    /// `1`/`-1` per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# bernoulli m={} N={} seed={}\n", self.m, self.n, self.seed);
        for i in 0..self.m {
            for (j, &e) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(if e > T::zero() { "1" } else { "-1" });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty matrix file"))?;
        let (m, n, seed) = parse_matrix_header(header)?;
        check_shape(m, n)?;
        let mut entries = Vec::with_capacity(m * n);
        let mut row_count = 0;
        for (i, line) in lines.enumerate() {
            let before = entries.len();
            for tok in line.split(',') {
                entries.push(match tok.trim() {
                    "1" | "+1" => T::one(),
                    "-1" => -T::one(),
                    other => {
                        return Err(Error::invalid(format!(
                            "matrix row {i}: entry {other:?} is not 1 or -1"
                        )))
                    }
                });
            }
            if entries.len() - before != n {
                return Err(Error::invalid(format!(
                    "matrix row {i} has {} entries, header says N={n}",
                    entries.len() - before
                )));
            }
            row_count += 1;
        }
        if row_count != m {
            return Err(Error::invalid(format!(
                "matrix has {row_count} rows, header says m={m}"
            )));
        }
        Self::from_entries(m, n, entries, seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn check_shape(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "measurement count must satisfy 1 <= m <= N, got m={m}, N={n}"
        )));
    }
    Ok(())
}

fn parse_matrix_header(line: &str) -> Result<(usize, usize, u64)> {
    let bad = || Error::invalid(format!("bad matrix header {line:?}"));
    let rest = line
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|r| r.strip_prefix("bernoulli"))
        .ok_or_else(bad)?;
    let (mut m, mut n, mut seed) = (None, None, None);
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(bad)?;
        match k {
            "m" => m = v.parse().ok(),
            "N" => n = v.parse().ok(),
            "seed" => seed = v.parse().ok(),
            _ => return Err(bad()),
        }
    }
    match (m, n, seed) {
        (Some(m), Some(n), Some(seed)) => Ok((m, n, seed)),
        _ => Err(bad()),
    }
}

/// Draws an `m×n` matrix with i.i.d. entries, P(+1) = P(−1) = 1/2.
pub fn bernoulli_matrix<T: Scalar>(m: usize, n: usize, seed: u64) -> Result<MeasurementMatrix<T>> {
    check_shape(m, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..m * n)
        .map(|_| if rng.gen::<bool>() { T::one() } else { -T::one() })
        .collect();
    Ok(MeasurementMatrix { m, n, entries, seed })
}

/// A measurement vector, used directly as a classification feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T> {
    pub values: Vec<T>,
    pub matrix_seed: u64,
    pub m: usize,
}

/// `y = A x`, without any normalization.
pub fn measure<T: Scalar>(a: &MeasurementMatrix<T>, x: &SignalVector<T>) -> Result<FeatureVector<T>> {
    if x.values.len() != a.n {
        return Err(Error::invalid(format!(
            "signal length {} does not match matrix width {}",
            x.values.len(),
            a.n
        )));
    }
    Ok(FeatureVector {
        values: a.apply(&x.values),
        matrix_seed: a.seed,
        m: a.m,
    })
}

/// [`measure`] over many signals in parallel; output order matches input order.
pub fn measure_all<T: Scalar>(
    a: &MeasurementMatrix<T>,
    signals: &[SignalVector<T>],
) -> Result<Vec<FeatureVector<T>>> {
    signals.par_iter().map(|x| measure(a, x)).collect()
}

/// Smallest `m` allowed by `m ≥ C·s·ln(N/s)`, never below `s`.
pub fn min_measurements(s: usize, n: usize, c: f64) -> Result<usize> {
    if s == 0 || s > n {
        return Err(Error::invalid(format!("sparsity must be in [1, N], got s={s}, N={n}")));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("bound constant must be positive, got {c}")));
    }
    let bound = (c * s as f64 * (n as f64 / s as f64).ln()).ceil();
    Ok((bound.max(0.0) as usize).max(s))
}

/// Exhaustively computed restricted isometry constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicEstimate<T> {
    pub s: usize,
    pub delta: T,
    pub support_count: u128,
}

/// δ_s of `A/√m` by enumerating every `s`-column support.
///
/// For each support the extreme eigenvalues of the normalized Gram matrix
/// bound the energy distortion; δ_s is the worst deviation from 1. Only
/// feasible for tiny `N` and `s`.
pub fn estimate_ric<T: Scalar>(
    a: &MeasurementMatrix<T>,
    s: usize,
    max_supports: u128,
) -> Result<RicEstimate<T>> {
    if s > a.n {
        return Err(Error::invalid(format!("sparsity {s} exceeds N={}", a.n)));
    }
    let count = binomial(a.n, s).unwrap_or(u128::MAX);
    if count > max_supports {
        return Err(Error::ResourceLimit(format!(
            "C({}, {s}) = {count} supports exceeds budget {max_supports}",
            a.n
        )));
    }
    let columns: Vec<Vec<T>> = (0..a.n).map(|j| a.column(j)).collect();
    let inv_m = T::one() / T::of_usize(a.m);
    let mut delta = T::zero();
    let mut gram = vec![T::zero(); s * s];
    for support in Supports::new(a.n, s) {
        for (p, &i) in support.iter().enumerate() {
            for (q, &j) in support.iter().enumerate().skip(p) {
                let g = dot(&columns[i], &columns[j]) * inv_m;
                gram[p * s + q] = g;
                gram[q * s + p] = g;
            }
        }
        if s == 0 {
            continue;
        }
        let eig = symmetric_eigenvalues(&gram, s);
        let worst = (T::one() - eig[0]).max(eig[s - 1] - T::one());
        delta = delta.max(worst);
    }
    Ok(RicEstimate {
        s,
        delta: delta.max(T::zero()),
        support_count: count,
    })
}

/// One feature row: the measurement values plus an optional integer label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow<T> {
    pub values: Vec<T>,
    pub label: Option<i64>,
}

/// Feature CSV: one row per sample, `m` numeric columns, then the label
/// (`?` when unlabeled).
pub fn features_to_csv<T: Scalar>(rows: &[FeatureRow<T>]) -> String {
    let mut out = String::new();
    for row in rows {
        for v in &row.values {
            let _ = write!(out, "{v},");
        }
        match row.label {
            Some(l) => {
                let _ = writeln!(out, "{l}");
            }
            None => out.push_str("?\n"),
        }
    }
    out
}

pub fn features_from_csv<T: Scalar>(text: &str) -> Result<Vec<FeatureRow<T>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split(',').map(str::trim).collect();
        if toks.len() < 2 {
            return Err(Error::invalid(format!(
                "line {}: need at least one feature and a label",
                i + 1
            )));
        }
        let (label_tok, value_toks) = toks.split_last().unwrap();
        let values = value_toks
            .iter()
            .map(|t| {
                t.parse::<f64>().map(T::of).map_err(|_| {
                    Error::invalid(format!("line {}: bad feature value {t:?}", i + 1))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        let label = match *label_tok {
            "?" => None,
            t => Some(t.parse::<i64>().map_err(|_| {
                Error::invalid(format!("line {}: bad label {t:?}", i + 1))
            })?),
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::invalid(format!(
                    "line {}: {} features, expected {w}",
                    i + 1,
                    values.len()
                )))
            }
            _ => {}
        }
        rows.push(FeatureRow { values, label });
    }
    Ok(rows)
}
