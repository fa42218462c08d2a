//! Sparse recovery from compressive measurements.
//!
//! Three solvers share one result type:
//!
//! * [`l0_bruteforce`] enumerates supports in order of size. It is
//!   exponential and exists as a reference for tiny instances.
//! * [`basis_pursuit`] minimizes `‖z‖₁` subject to `Az = y` with ADMM over
//!   the affine feasible set, followed by a least-squares polish on the
//!   detected support.
//! * [`tv_reconstruct`] minimizes total variation subject to
//!   `‖Ax − y‖₂ ≤ ε` with a first-order primal-dual (Chambolle–Pock)
//!   iteration and a final least-norm feasibility correction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::SignalVector;
use crate::linalg::{binomial, cholesky, cholesky_solve, least_squares, spectral_norm_sq, Supports};
use crate::scalar::{axpy, norm1, norm2, Scalar};
use crate::sensing::{FeatureVector, MeasurementMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult<T> {
    pub x_hat: Vec<T>,
    /// `‖A·x_hat − y‖₂`
    pub residual: T,
    /// ℓ0 count, ℓ1 norm or TV, depending on the solver.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> ReconstructionResult<T> {
    fn new(a: &MeasurementMatrix<T>, y: &[T], x_hat: Vec<T>, objective: T, iterations: usize, converged: bool) -> Self {
        let residual = residual_norm(a, &x_hat, y);
        ReconstructionResult {
            x_hat,
            residual,
            objective,
            iterations,
            converged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvVariant {
    #[default]
    Isotropic,
    Anisotropic,
}

/// JSON record written next to reconstructed images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub method: String,
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub variant: Option<TvVariant>,
}

impl ReconstructionReport {
    pub fn new<T: Scalar>(method: &str, result: &ReconstructionResult<T>, variant: Option<TvVariant>) -> Self {
        ReconstructionReport {
            method: method.to_string(),
            residual: result.residual.as_f64(),
            objective: result.objective.as_f64(),
            iterations: result.iterations,
            converged: result.converged,
            variant,
        }
    }
}

fn residual_norm<T: Scalar>(a: &MeasurementMatrix<T>, x: &[T], y: &[T]) -> T {
    let ax = a.apply(x);
    ax.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&p, &q)| acc + (p - q) * (p - q))
        .sqrt()
}

fn check_dims<T: Scalar>(a: &MeasurementMatrix<T>, y: &FeatureVector<T>) -> Result<()> {
    if y.values.len() != a.rows() {
        return Err(Error::invalid(format!(
            "measurement length {} does not match matrix rows {}",
            y.values.len(),
            a.rows()
        )));
    }
    Ok(())
}

/// Default cap on supports examined by [`l0_bruteforce`].
pub const DEFAULT_L0_BUDGET: u128 = 2_000_000;

/// Sparsest vector fitting `y` within `fit_tol`, by exhaustive support search.
///
/// Supports are tried by size `0..=s_max`, lexicographically within a size;
/// the first one whose least-squares fit has residual `≤ fit_tol` wins. When
/// none fits, the best residual found is returned with `converged = false`.
/// `objective` is the number of non-zeros, `iterations` the supports visited.
pub fn l0_bruteforce<T: Scalar>(
    a: &MeasurementMatrix<T>,
    y: &FeatureVector<T>,
    s_max: usize,
    fit_tol: T,
    max_supports: u128,
) -> Result<ReconstructionResult<T>> {
    check_dims(a, y)?;
    if !(fit_tol > T::zero()) {
        return Err(Error::invalid("fit tolerance must be positive"));
    }
    let n = a.cols();
    let s_max = s_max.min(n);
    let total: u128 = (0..=s_max)
        .map(|s| binomial(n, s).unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add);
    if total > max_supports {
        return Err(Error::ResourceLimit(format!(
            "{total} supports up to size {s_max} exceeds budget {max_supports}"
        )));
    }

    let y = &y.values;
    let columns: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut best: (T, Vec<T>, usize) = (norm2(y), vec![T::zero(); n], 0);
    let mut visited = 0usize;
    for s in 0..=s_max {
        for support in Supports::new(n, s) {
            visited += 1;
            let sub: Vec<Vec<T>> = support.iter().map(|&j| columns[j].clone()).collect();
            let Some(coef) = least_squares(&sub, y) else {
                continue;
            };
            let mut x = vec![T::zero(); n];
            for (&j, &c) in support.iter().zip(&coef) {
                x[j] = c;
            }
            let r = residual_norm(a, &x, y);
            if r <= fit_tol {
                let nnz = x.iter().filter(|v| **v != T::zero()).count();
                return Ok(ReconstructionResult {
                    x_hat: x,
                    residual: r,
                    objective: T::of_usize(nnz),
                    iterations: visited,
                    converged: true,
                });
            }
            if r < best.0 {
                best = (r, x, s);
            }
        }
    }
    let (r, x, s) = best;
    Ok(ReconstructionResult {
        x_hat: x,
        residual: r,
        objective: T::of_usize(s),
        iterations: visited,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpParams {
    /// Feasibility: `‖Ax − y‖ ≤ feas_tol·(1 + ‖y‖)`.
    pub feas_tol: f64,
    /// Relative optimality target for the ℓ1 objective.
    pub opt_tol: f64,
    pub max_iterations: usize,
}

impl Default for BpParams {
    fn default() -> Self {
        BpParams {
            feas_tol: 1e-6,
            opt_tol: 1e-4,
            max_iterations: 5000,
        }
    }
}

/// Projection onto `{x : Ax = y}` through a Cholesky factor of `AAᵀ`.
struct AffineProjector<'a, T> {
    a: &'a MeasurementMatrix<T>,
    chol: Vec<T>,
}

impl<'a, T: Scalar> AffineProjector<'a, T> {
    fn new(a: &'a MeasurementMatrix<T>) -> Option<Self> {
        let m = a.rows();
        let mut gram = vec![T::zero(); m * m];
        for i in 0..m {
            for j in i..m {
                let g = crate::scalar::dot(a.row(i), a.row(j));
                gram[i * m + j] = g;
                gram[j * m + i] = g;
            }
        }
        let chol = cholesky(&gram, m)?;
        Some(AffineProjector { a, chol })
    }

    /// `Aᵀ(AAᵀ)⁻¹ r`: the least-norm `d` with `Ad = r`.
    fn least_norm(&self, r: &[T]) -> Vec<T> {
        let mut w = r.to_vec();
        cholesky_solve(&self.chol, self.a.rows(), &mut w);
        self.a.apply_transpose(&w)
    }

    fn project(&self, v: &mut [T], y: &[T]) {
        let r: Vec<T> = self.a.apply(v).iter().zip(y).map(|(&p, &q)| p - q).collect();
        let d = self.least_norm(&r);
        axpy(-T::one(), &d, v);
    }
}

fn soft_threshold<T: Scalar>(v: T, k: T) -> T {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        T::zero()
    }
}

/// Minimizes `‖z‖₁` subject to `Az = y`.
///
/// ADMM splits the problem into an exact projection onto the affine set and
/// a soft-threshold step, with residual balancing of the penalty. The
/// returned point is always the projected iterate (or its polished
/// refinement), so feasibility holds to rounding error. `converged` reports
/// whether the primal and dual ADMM residuals met their tolerances before
/// `max_iterations`.
pub fn basis_pursuit<T: Scalar>(
    a: &MeasurementMatrix<T>,
    y: &FeatureVector<T>,
    params: &BpParams,
) -> Result<ReconstructionResult<T>> {
    check_dims(a, y)?;
    let n = a.cols();
    let y = &y.values;
    let y_norm = norm2(y);
    if y_norm == T::zero() {
        return Ok(ReconstructionResult::new(a, y, vec![T::zero(); n], T::zero(), 0, true));
    }
    let proj = AffineProjector::new(a)
        .ok_or_else(|| Error::invalid("measurement matrix rows are linearly dependent"))?;

    let mut x = proj.least_norm(y);
    let scale = x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let mut z = x.clone();
    let mut u = vec![T::zero(); n];
    let mut rho = T::of_usize(n).sqrt() / norm1(&x).max(T::min_positive_value()) * T::of(10.0);
    let rel_tol = T::of(params.opt_tol * 1e-2);
    let abs_tol = T::of(1e-12) * scale;
    let sqrt_n = T::of_usize(n).sqrt();

    let mut converged = false;
    let mut iterations = 0;
    let mut v = vec![T::zero(); n];
    while iterations < params.max_iterations {
        iterations += 1;
        for ((vi, &zi), &ui) in v.iter_mut().zip(&z).zip(&u) {
            *vi = zi - ui;
        }
        proj.project(&mut v, y);
        std::mem::swap(&mut x, &mut v);

        let thresh = T::one() / rho;
        let mut dual_sq = T::zero();
        let mut primal_sq = T::zero();
        for j in 0..n {
            let z_new = soft_threshold(x[j] + u[j], thresh);
            dual_sq = dual_sq + (z_new - z[j]) * (z_new - z[j]);
            z[j] = z_new;
            let r = x[j] - z_new;
            primal_sq = primal_sq + r * r;
            u[j] = u[j] + r;
        }
        let primal = primal_sq.sqrt();
        let dual = rho * dual_sq.sqrt();
        let eps_pri = sqrt_n * abs_tol + rel_tol * norm2(&x).max(norm2(&z));
        let eps_dual = sqrt_n * abs_tol + rel_tol * rho * norm2(&u);
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
        if iterations % 10 == 0 {
            let two = T::of(2.0);
            if primal > T::of(10.0) * dual {
                rho = rho * two;
                u.iter_mut().for_each(|ui| *ui = *ui / two);
            } else if dual > T::of(10.0) * primal {
                rho = rho / two;
                u.iter_mut().for_each(|ui| *ui = *ui * two);
            }
        }
    }

    let mut best = x;
    let mut best_l1 = norm1(&best);
    if let Some(polished) = polish_support(a, y, &z) {
        let l1 = norm1(&polished);
        let feas = residual_norm(a, &polished, y) <= T::of(params.feas_tol) * (T::one() + y_norm);
        if feas && l1 <= best_l1 * (T::one() + T::of(params.opt_tol)) {
            best = polished;
            best_l1 = l1;
        }
    }
    Ok(ReconstructionResult::new(a, y, best, best_l1, iterations, converged))
}

/// Least-squares refit on the non-zeros of `z`, when that support is small
/// enough to determine the coefficients.
fn polish_support<T: Scalar>(a: &MeasurementMatrix<T>, y: &[T], z: &[T]) -> Option<Vec<T>> {
    let support: Vec<usize> = (0..z.len()).filter(|&j| z[j] != T::zero()).collect();
    if support.is_empty() || support.len() > a.rows() {
        return None;
    }
    let cols: Vec<Vec<T>> = support.iter().map(|&j| a.column(j)).collect();
    let coef = least_squares(&cols, y)?;
    let mut x = vec![T::zero(); z.len()];
    for (&j, c) in support.iter().zip(coef) {
        x[j] = c;
    }
    Some(x)
}

/// Total variation with forward differences; the difference leaving the
/// last column (row) is zero.
pub fn tv<T: Scalar>(x: &SignalVector<T>, variant: TvVariant) -> T {
    let (rows, cols) = x.dims;
    let v = &x.values;
    let mut total = T::zero();
    for r in 0..rows {
        for c in 0..cols {
            let here = v[r * cols + c];
            let dh = if c + 1 < cols { v[r * cols + c + 1] - here } else { T::zero() };
            let dv = if r + 1 < rows { v[(r + 1) * cols + c] - here } else { T::zero() };
            total = total
                + match variant {
                    TvVariant::Isotropic => (dh * dh + dv * dv).sqrt(),
                    TvVariant::Anisotropic => dh.abs() + dv.abs(),
                };
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvParams<T> {
    /// Residual bound ε; `None` means `1e-3·‖y‖₂`.
    pub epsilon: Option<T>,
    pub max_iterations: usize,
    /// Relative TV change over `window` iterations that counts as stalled.
    pub tolerance: T,
    pub window: usize,
    pub variant: TvVariant,
}

impl<T: Scalar> Default for TvParams<T> {
    fn default() -> Self {
        TvParams {
            epsilon: None,
            max_iterations: 5000,
            tolerance: T::of(1e-5),
            window: 100,
            variant: TvVariant::Isotropic,
        }
    }
}

pub const DEFAULT_EPSILON_FRACTION: f64 = 1e-3;

fn gradient<T: Scalar>(x: &[T], rows: usize, cols: usize, gh: &mut [T], gv: &mut [T]) {
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            gh[i] = if c + 1 < cols { x[i + 1] - x[i] } else { T::zero() };
            gv[i] = if r + 1 < rows { x[i + cols] - x[i] } else { T::zero() };
        }
    }
}

/// Adjoint of [`gradient`] (negative divergence), accumulated into `out`.
fn gradient_adjoint<T: Scalar>(ph: &[T], pv: &[T], rows: usize, cols: usize, out: &mut [T]) {
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let mut s = T::zero();
            if c + 1 < cols {
                s = s - ph[i];
            }
            if c > 0 {
                s = s + ph[i - 1];
            }
            if r + 1 < rows {
                s = s - pv[i];
            }
            if r > 0 {
                s = s + pv[i - cols];
            }
            out[i] = out[i] + s;
        }
    }
}

/// Minimizes `TV(x)` subject to `‖Ax − y‖₂ ≤ ε` over images of size `dims`.
///
/// The measurement operator is rescaled by `1/‖A‖₂` so the stacked operator
/// `[∇; A/‖A‖]` has norm at most 3, which fixes the primal and dual steps.
/// Iteration stops once TV changes by less than `tolerance` (relative) over
/// `window` iterations; the returned image is then pulled onto the
/// constraint set by the least-norm correction `Aᵀ(AAᵀ)⁻¹r`.
pub fn tv_reconstruct<T: Scalar>(
    a: &MeasurementMatrix<T>,
    y: &FeatureVector<T>,
    dims: (usize, usize),
    params: &TvParams<T>,
) -> Result<ReconstructionResult<T>> {
    check_dims(a, y)?;
    let (rows, cols) = dims;
    let n = rows * cols;
    if a.cols() != n {
        return Err(Error::invalid(format!(
            "matrix width {} does not match image {rows}x{cols}",
            a.cols()
        )));
    }
    if !(params.tolerance > T::zero()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let y = &y.values;
    let y_norm = norm2(y);
    let eps = params
        .epsilon
        .unwrap_or_else(|| T::of(DEFAULT_EPSILON_FRACTION) * y_norm);
    if eps < T::zero() {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    if eps >= y_norm {
        return Ok(ReconstructionResult::new(a, y, vec![T::zero(); n], T::zero(), 0, true));
    }

    let m = a.rows();
    let op_norm = spectral_norm_sq(a.entries(), m, n, 500).sqrt();
    let c = T::one() / op_norm;
    let y_s: Vec<T> = y.iter().map(|&v| v * c).collect();
    let eps_s = eps * c;
    let step = T::of(0.99 / 3.0);

    let mut x = vec![T::zero(); n];
    let mut x_bar = x.clone();
    let mut ph = vec![T::zero(); n];
    let mut pv = vec![T::zero(); n];
    let mut q = vec![T::zero(); m];
    let mut gh = vec![T::zero(); n];
    let mut gv = vec![T::zero(); n];
    let mut grad_x = vec![T::zero(); n];
    let mut history: VecDeque<T> = VecDeque::with_capacity(params.window + 1);
    let mut stalled = false;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;

        // dual update for the TV term: projection onto the unit ball per pixel
        gradient(&x_bar, rows, cols, &mut gh, &mut gv);
        for i in 0..n {
            let h = ph[i] + step * gh[i];
            let v = pv[i] + step * gv[i];
            match params.variant {
                TvVariant::Isotropic => {
                    let mag = (h * h + v * v).sqrt().max(T::one());
                    ph[i] = h / mag;
                    pv[i] = v / mag;
                }
                TvVariant::Anisotropic => {
                    ph[i] = h.max(-T::one()).min(T::one());
                    pv[i] = v.max(-T::one()).min(T::one());
                }
            }
        }

        // dual update for the ε-ball: q ← q̃ − σ·P_B(q̃/σ)
        let ax = a.apply(&x_bar);
        let mut w: Vec<T> = (0..m).map(|i| (q[i] + step * c * ax[i]) / step - y_s[i]).collect();
        let w_norm = norm2(&w);
        if w_norm > eps_s {
            let shrink = eps_s / w_norm;
            w.iter_mut().for_each(|wi| *wi = *wi * shrink);
        }
        for i in 0..m {
            let q_tilde = q[i] + step * c * ax[i];
            q[i] = q_tilde - step * (y_s[i] + w[i]);
        }

        // primal update
        grad_x.iter_mut().for_each(|g| *g = T::zero());
        gradient_adjoint(&ph, &pv, rows, cols, &mut grad_x);
        let atq = a.apply_transpose(&q);
        for j in 0..n {
            let x_new = x[j] - step * (grad_x[j] + c * atq[j]);
            x_bar[j] = x_new + x_new - x[j];
            x[j] = x_new;
        }

        let current = tv(&SignalVector { values: x.clone(), dims }, params.variant);
        history.push_back(current);
        if history.len() > params.window {
            let old = history.pop_front().unwrap();
            if (current - old).abs() <= params.tolerance * current.max(T::min_positive_value()) {
                stalled = true;
                break;
            }
        }
    }

    let r: Vec<T> = a.apply(&x).iter().zip(y).map(|(&p, &q)| p - q).collect();
    let r_norm = norm2(&r);
    let mut feasible = r_norm <= eps;
    if !feasible {
        if let Some(proj) = AffineProjector::new(a) {
            let t = T::one() - eps / r_norm;
            let d = proj.least_norm(&r);
            axpy(-t, &d, &mut x);
            feasible = residual_norm(a, &x, y) <= eps * (T::one() + T::of(1e-6)) + T::of(1e-9) * y_norm;
        }
    }
    let objective = tv(&SignalVector { values: x.clone(), dims }, params.variant);
    Ok(ReconstructionResult::new(a, y, x, objective, iterations, stalled && feasible))
}
