//! Small dense linear-algebra kernels on row-major slices.
//!
//! Sizes here are tiny (Gram matrices of a few columns, m×m systems with
//! m ≤ a few hundred), so plain loops are used throughout.

use crate::scalar::{dot, Scalar};

/// Lower Cholesky factor of a symmetric positive-definite `n×n` matrix.
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` in place given the lower factor from [`cholesky`].
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Least-squares solution of `M x ≈ b` for a column-major `rows×cols` matrix
/// given as a list of columns, via Householder QR.
///
/// Returns `None` if `M` is numerically rank deficient.
pub fn least_squares<T: Scalar>(columns: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let cols = columns.len();
    let rows = b.len();
    if cols == 0 {
        return Some(Vec::new());
    }
    if cols > rows {
        return None;
    }
    let mut q: Vec<Vec<T>> = columns.to_vec();
    let mut rhs = b.to_vec();
    let scale = columns
        .iter()
        .flat_map(|c| c.iter())
        .fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let tiny = T::epsilon() * T::of_usize(rows.max(cols)) * T::of(100.0) * scale.max(T::one());

    for k in 0..cols {
        let alpha_norm = q[k][k..].iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        if alpha_norm <= tiny {
            return None;
        }
        let alpha = if q[k][k] > T::zero() {
            -alpha_norm
        } else {
            alpha_norm
        };
        let mut v: Vec<T> = q[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > T::zero() {
            for col in q.iter_mut().skip(k) {
                let proj = dot(&v, &col[k..]) * T::of(2.0) / vnorm2;
                for (c, &vi) in col[k..].iter_mut().zip(&v) {
                    *c = *c - proj * vi;
                }
            }
            let proj = dot(&v, &rhs[k..]) * T::of(2.0) / vnorm2;
            for (c, &vi) in rhs[k..].iter_mut().zip(&v) {
                *c = *c - proj * vi;
            }
        }
    }

    let mut x = vec![T::zero(); cols];
    for i in (0..cols).rev() {
        let mut s = rhs[i];
        for j in i + 1..cols {
            s = s - q[j][i] * x[j];
        }
        let d = q[i][i];
        if d.abs() <= tiny {
            return None;
        }
        x[i] = s / d;
    }
    Some(x)
}

/// Eigenvalues of a symmetric `n×n` matrix by cyclic Jacobi rotations,
/// sorted ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let two = T::of(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[i * n + j] * m[i * n + j]);
        let diag: T = (0..n).fold(T::zero(), |acc, i| acc + m[i * n + i] * m[i * n + i]);
        if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalue"));
    eig
}

/// Numerical rank of a row-major `rows×cols` matrix by Gaussian elimination
/// with full pivoting.
pub fn rank<T: Scalar>(a: &[T], rows: usize, cols: usize) -> usize {
    let mut m = a.to_vec();
    let scale = m.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if scale == T::zero() {
        return 0;
    }
    let tol = scale * T::epsilon() * T::of_usize(rows.max(cols)) * T::of(10.0);
    let mut r = 0;
    let mut col_perm: Vec<usize> = (0..cols).collect();
    while r < rows.min(cols) {
        let mut best = (r, r, T::zero());
        for i in r..rows {
            for (j, &cj) in col_perm.iter().enumerate().skip(r) {
                let v = m[i * cols + cj].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (pi, pj, _) = best;
        for k in 0..cols {
            m.swap(r * cols + k, pi * cols + k);
        }
        col_perm.swap(r, pj);
        let pc = col_perm[r];
        let pivot = m[r * cols + pc];
        for i in r + 1..rows {
            let f = m[i * cols + pc] / pivot;
            if f != T::zero() {
                for k in 0..cols {
                    m[i * cols + k] = m[i * cols + k] - f * m[r * cols + k];
                }
            }
        }
        r += 1;
    }
    r
}

/// Largest singular value squared of a row-major `rows×cols` matrix,
/// estimated by power iteration on `AᵀA`.
pub fn spectral_norm_sq<T: Scalar>(a: &[T], rows: usize, cols: usize, iterations: usize) -> T {
    let mut v = vec![T::one() / T::of_usize(cols).sqrt(); cols];
    // Perturb away from the all-ones direction, which can be an exact null vector.
    for (j, vj) in v.iter_mut().enumerate() {
        *vj = *vj * (T::one() + T::of(0.01) * T::of_usize(j % 7));
    }
    let mut av = vec![T::zero(); rows];
    let mut lambda = T::zero();
    for _ in 0..iterations {
        for (i, out) in av.iter_mut().enumerate() {
            *out = dot(&a[i * cols..(i + 1) * cols], &v);
        }
        let mut w = vec![T::zero(); cols];
        for (i, &ai) in av.iter().enumerate() {
            for (wj, &aij) in w.iter_mut().zip(&a[i * cols..(i + 1) * cols]) {
                *wj = *wj + aij * ai;
            }
        }
        let nrm = dot(&w, &w).sqrt();
        if nrm == T::zero() {
            return T::zero();
        }
        let next = dot(&v, &w) / dot(&v, &v);
        for (vj, &wj) in v.iter_mut().zip(&w) {
            *vj = wj / nrm;
        }
        if (next - lambda).abs() <= T::of(1e-10) * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// All `k`-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Supports {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Supports {
    pub fn new(n: usize, k: usize) -> Self {
        Supports {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Supports {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let mut b = [2.0, 1.0];
        cholesky_solve(&l, 2, &mut b);
        // 4x + 2y = 2, 2x + 3y = 1 -> x = 0.5, y = 0
        assert_relative_eq!(b[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(b[1], 0.0, epsilon = 1e-12);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn least_squares_overdetermined() {
        // fit y = 1 + 2t at t = 0, 1, 2
        let cols = vec![vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]];
        let x = least_squares(&cols, &[1.0, 3.0, 5.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-12);
        let dup = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(least_squares(&dup, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        let eig = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert_relative_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 3.0, epsilon = 1e-12);
        let diag = symmetric_eigenvalues(&[5.0f32, 0.0, 0.0, -1.0], 2);
        assert_eq!(diag, vec![-1.0, 5.0]);
    }

    #[test]
    fn rank_detects_dependence() {
        assert_eq!(rank(&[1.0, 2.0, 2.0, 4.0], 2, 2), 1);
        assert_eq!(rank(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2, 3), 2);
        assert_eq!(rank(&[0.0f64; 4], 2, 2), 0);
    }

    #[test]
    fn supports_enumerate_in_order() {
        let all: Vec<Vec<usize>> = Supports::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Supports::new(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(Supports::new(2, 3).count(), 0);
        assert_eq!(Supports::new(12, 3).count() as u128, binomial(12, 3).unwrap());
        assert_eq!(binomial(256, 128), None);
        assert_eq!(binomial(8, 2), Some(28));
        assert_eq!(binomial(5, 7), Some(0));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_relative_eq!(spectral_norm_sq(&a, 2, 3, 500), 9.0, epsilon = 1e-8);
    }
}
