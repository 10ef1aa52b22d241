//! Dense row-major matrices and the handful of kernels the rest of the crate
//! needs: products, symmetric eigenvalues (cyclic Jacobi), singular values
//! (one-sided Jacobi) and full-rank least squares.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute accuracy of the extreme eigenvalues returned by
/// [`spectral_extremes_symmetric`].
pub const EIGEN_TOLERANCE: f64 = 1e-10;
/// Entrywise asymmetry accepted by the symmetric routines.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Smallest singular value accepted by [`solve_least_squares`].
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Bound on `|A^T (A x - y)|` for a least-squares solution.
pub const LSQ_ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

const MAX_JACOBI_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::new",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::from_rows",
                expected: m,
                actual: bad.len(),
            });
        }
        Self::new(n, m, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(
            diag.len(),
            diag.len(),
            |i, j| if i == j { diag[i] } else { 0.0 },
        )
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Columns `idx` of `self`, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// `A^T A`, exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let cols: Vec<Vec<f64>> = (0..n).map(|j| self.column(j)).collect();
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(&cols[i], &cols[j]);
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Largest entrywise asymmetry `|m_ij - m_ji|` and where it occurs.
    fn asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let gap = (self.get(i, j) - self.get(j, i)).abs();
                if gap > worst.2 {
                    worst = (i, j, gap);
                }
            }
        }
        worst
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (n, v) in norms.iter_mut().zip(self.row(i)) {
                *n += v * v;
            }
        }
        norms.iter_mut().for_each(|n| *n = n.sqrt());
        norms
    }

    /// Rescales every nonzero column to unit Euclidean norm.
    pub fn normalize_columns(&mut self) {
        let norms = self.column_norms();
        for i in 0..self.rows {
            for (j, n) in norms.iter().enumerate() {
                if *n > 0.0 {
                    self.data[i * self.cols + j] /= n;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.0)
    }

    /// Copy of `self` with every entry outside `keep` set to zero.
    pub fn restrict(&self, keep: &[usize]) -> DenseVector {
        let mut out = vec![0.0; self.0.len()];
        for &i in keep {
            out[i] = self.0[i];
        }
        Self(out)
    }

    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                op: "DenseVector::sub",
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Self(
            self.iter().zip(other.iter()).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scaled(&self, c: f64) -> DenseVector {
        Self(self.iter().map(|v| c * v).collect())
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

// slice kernels, shared with the solvers and the enumeration loops

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `out = A x` without allocation; dimensions are the caller's problem.
pub(crate) fn gemv(a: &DenseMatrix, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(a.row(i), x);
    }
}

/// `out = A^T v` without allocation.
pub(crate) fn gemv_t(a: &DenseMatrix, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, vi) in v.iter().enumerate() {
        if *vi == 0.0 {
            continue;
        }
        for (o, aij) in out.iter_mut().zip(a.row(i)) {
            *o += vi * aij;
        }
    }
}

pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<DenseVector> {
    if a.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            op: "matvec",
            expected: a.cols(),
            actual: x.len(),
        });
    }
    let mut out = vec![0.0; a.rows()];
    gemv(a, x, &mut out);
    Ok(DenseVector(out))
}

/// `A^T v`.
pub fn matvec_transpose(a: &DenseMatrix, v: &[f64]) -> Result<DenseVector> {
    if a.rows() != v.len() {
        return Err(Error::DimensionMismatch {
            op: "matvec_transpose",
            expected: a.rows(),
            actual: v.len(),
        });
    }
    let mut out = vec![0.0; a.cols()];
    gemv_t(a, v, &mut out);
    Ok(DenseVector(out))
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let (i, j, gap) = m.asymmetry();
    if gap > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { i, j, gap });
    }
    Ok(())
}

/// Cyclic Jacobi on a symmetric `n x n` row-major buffer. On return the
/// diagonal of `a` holds the eigenvalues; `v`, when given, accumulates the
/// eigenvectors as columns. Only the upper triangle is trusted on input.
pub(crate) fn jacobi_in_place(a: &mut [f64], n: usize, mut v: Option<&mut [f64]>) {
    if let Some(v) = v.as_deref_mut() {
        v.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
    }
    if n < 2 {
        return;
    }
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return;
    }
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
}

/// Smallest and largest eigenvalue of a small symmetric buffer, which is
/// clobbered. Used by the enumeration loops to avoid allocating.
pub(crate) fn extremes_in_place(a: &mut [f64], n: usize) -> (f64, f64) {
    match n {
        0 => (0.0, 0.0),
        1 => (a[0], a[0]),
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            (mean - rad, mean + rad)
        }
        _ => {
            jacobi_in_place(a, n, None);
            (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                let d = a[i * n + i];
                (lo.min(d), hi.max(d))
            })
        }
    }
}

/// Full eigen-decomposition of a symmetric matrix: eigenvalues in ascending
/// order and the matching orthonormal eigenvectors as columns.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut a = m.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    jacobi_in_place(&mut a, n, Some(&mut v));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    Ok((values, vectors))
}

pub fn spectral_extremes_symmetric(m: &DenseMatrix) -> Result<(f64, f64)> {
    check_symmetric(m)?;
    let mut a = m.as_slice().to_vec();
    Ok(extremes_in_place(&mut a, m.rows()))
}

pub fn max_singular_value(m: &DenseMatrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Empty);
    }
    // Gram of the smaller side
    let g = if m.rows() < m.cols() {
        m.transpose().gram()
    } else {
        m.gram()
    };
    let (_, hi) = spectral_extremes_symmetric(&g)?;
    Ok(hi.max(0.0).sqrt())
}

/// Applies the plane rotation `(c, s)` to rows `p < q` of `rows`.
fn rotate_pair(rows: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = rows.split_at_mut(q);
    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*xp, *xq);
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// Thin singular value decomposition `A = U diag(sigma) V^T` computed by
/// one-sided Jacobi. Singular values are sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn new(a: &DenseMatrix) -> Svd {
        if a.rows() < a.cols() {
            let t = Svd::tall(&a.transpose());
            return Svd {
                u: t.v,
                sigma: t.sigma,
                v: t.u,
            };
        }
        Svd::tall(a)
    }

    fn tall(a: &DenseMatrix) -> Svd {
        let (m, n) = (a.rows(), a.cols());
        // columns stored contiguously
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = dot(&cols[p], &cols[p]);
                    let beta = dot(&cols[q], &cols[q]);
                    let gamma = dot(&cols[p], &cols[q]);
                    if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate_pair(&mut cols, p, q, c, s);
                    rotate_pair(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma_raw: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| sigma_raw[j].total_cmp(&sigma_raw[i]));
        let sigma: Vec<f64> = order.iter().map(|&j| sigma_raw[j]).collect();
        let u = DenseMatrix::from_fn(m, n, |r, c| {
            let j = order[c];
            if sigma_raw[j] > 0.0 {
                cols[j][r] / sigma_raw[j]
            } else {
                0.0
            }
        });
        let v = DenseMatrix::from_fn(n, n, |r, c| v[order[c]][r]);
        Svd { u, sigma, v }
    }

    /// Number of singular values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.sigma.iter().filter(|s| **s > tol).count()
    }

    /// `A^+ b` truncated to singular values above `tol`.
    pub fn pseudo_solve(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let r = self.rank(tol);
        let mut out = vec![0.0; self.v.rows()];
        for k in 0..r {
            let coeff = (0..self.u.rows())
                .map(|i| self.u.get(i, k) * b[i])
                .sum::<f64>()
                / self.sigma[k];
            for (i, o) in out.iter_mut().enumerate() {
                *o += coeff * self.v.get(i, k);
            }
        }
        out
    }
}

/// Minimizer of `|A x - y|_2` for `A` of full column rank.
pub fn solve_least_squares(a: &DenseMatrix, y: &[f64]) -> Result<DenseVector> {
    if a.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            op: "solve_least_squares",
            expected: a.rows(),
            actual: y.len(),
        });
    }
    if a.rows() < a.cols() {
        return Err(Error::RankDeficient {
            sigma_min: 0.0,
            tolerance: RANK_TOLERANCE,
        });
    }
    let svd = Svd::new(a);
    let sigma_min = svd.sigma.last().copied().unwrap_or(0.0);
    if sigma_min <= RANK_TOLERANCE {
        return Err(Error::RankDeficient {
            sigma_min,
            tolerance: RANK_TOLERANCE,
        });
    }
    Ok(DenseVector(svd.pseudo_solve(y, 0.0)))
}

/// Solves the symmetric positive definite system `g x = b` in place via
/// Cholesky. Returns `false` when `g` is not numerically positive definite.
pub(crate) fn cholesky_solve_in_place(g: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    let scale = (0..n).fold(0.0_f64, |m, i| m.max(g[i * n + i].abs()));
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= g[j * n + k] * g[j * n + k];
        }
        if d <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return false;
        }
        let d = d.sqrt();
        g[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= g[i * n + k] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= g[k * n + i] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    true
}

/// Inverse of a symmetric positive definite matrix, `None` when it is not
/// numerically positive definite.
pub(crate) fn spd_inverse(m: &DenseMatrix) -> Option<DenseMatrix> {
    let n = m.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut g = m.as_slice().to_vec();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if !cholesky_solve_in_place(&mut g, n, &mut e) {
            return None;
        }
        for (i, v) in e.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Some(out)
}

/// Solves the square system `a x = b` in place by Gaussian elimination with
/// partial pivoting. Returns `false` when a pivot falls below `1e-12` times
/// the largest entry of `a`.
pub(crate) fn lu_solve_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("non-empty range");
        if a[pivot * n + col].abs() <= 1e-12 * scale {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for i in col + 1..n {
            let f = a[i * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[i * n + k] -= f * a[col * n + k];
            }
            b[i] -= f * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Solves the square nonsingular system `a x = b`.
pub fn solve_square(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            op: "solve_square",
            expected: a.rows(),
            actual: b.len(),
        });
    }
    let mut m = a.as_slice().to_vec();
    let mut x = b.to_vec();
    if !lu_solve_in_place(&mut m, a.rows(), &mut x) {
        return Err(Error::RankDeficient {
            sigma_min: 0.0,
            tolerance: 1e-12,
        });
    }
    Ok(DenseVector(x))
}
