//! Dense row-major matrices and the symmetric positive-definite solve used by
//! every closed-form ridge fit in the crate.
//!
//! Storage is `data[i * cols + j] = A[i, j]`. Vectors are plain `f64` slices.
//! Diagonal weight matrices are never materialized; weighted products take the
//! weights as a slice and scale rows instead.

use std::fmt;

use thiserror::Error;

/// Block size of the blocked Cholesky factorization and of the blocked
/// weighted Gram product.
const BLOCK: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: matrix must be square, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("data length {got} does not match shape {rows}x{cols}")]
    InvalidData {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("matrix is not symmetric: entries ({row},{col}) and ({col},{row}) differ")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is singular or indefinite: pivot {index} is {pivot}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("ridge must be non-negative and finite, got {0}")]
    InvalidRidge(f64),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A dense real matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.data.len() > 64 {
            return write!(f, "DenseMatrix({}x{})", self.rows, self.cols);
        }
        f.debug_list()
            .entries(self.data.chunks(self.cols.max(1)))
            .finish()
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::InvalidData {
                rows,
                cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    ///
    /// # Panics
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Appends a constant column.
    pub fn with_constant_column(&self, value: f64) -> Self {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in self.row_iter() {
            data.extend_from_slice(r);
            data.push(value);
        }
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "matvec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok(self.row_iter().map(|r| dot(r, x)).collect())
    }

    /// `Aᵀ v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "tr_matvec",
                left: (self.cols, self.rows),
                right: (v.len(), 1),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            axpy(vi, r, &mut out);
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += a x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Standard matrix product `a b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    if b.cols == 0 {
        return Ok(out);
    }
    for (i, arow) in a.row_iter().enumerate() {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in arow.iter().enumerate() {
            if aik != 0.0 {
                axpy(aik, b.row(k), orow);
            }
        }
    }
    Ok(out)
}

/// `Zᵀ diag(w) Z` for an `n x m` matrix `z`, i.e. `Σᵢ wᵢ zᵢ zᵢᵀ`.
///
/// Only the lower triangle is computed; the upper triangle is a bit-for-bit
/// mirror of it.
pub fn gram_weighted(z: &DenseMatrix, w: &[f64]) -> Result<DenseMatrix> {
    if w.len() != z.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "gram_weighted",
            left: z.shape(),
            right: (w.len(), 1),
        });
    }
    check_weights(w)?;
    let (n, m) = z.shape();
    let mut out = DenseMatrix::zeros(m, m);
    if n == 0 || m == 0 {
        return Ok(out);
    }
    let mut scaled = z.clone();
    for (i, &wi) in w.iter().enumerate() {
        for v in &mut scaled.data[i * m..(i + 1) * m] {
            *v *= wi;
        }
    }

    if m <= BLOCK {
        // small case: direct accumulation over instances
        for i in 0..n {
            let zi = z.row(i);
            let si = scaled.row(i);
            for r in 0..m {
                let s = si[r];
                if s == 0.0 {
                    continue;
                }
                let orow = &mut out.data[r * m..r * m + r + 1];
                axpy(s, &zi[..=r], orow);
            }
        }
    } else {
        // block rows of the lower triangle: out[r0..r1, 0..r1] = S[:, r0..r1]ᵀ Z[:, 0..r1]
        for r0 in (0..m).step_by(BLOCK) {
            let r1 = (r0 + BLOCK).min(m);
            // SAFETY: all pointers address in-bounds regions of distinct buffers;
            // strides describe the transposed views of row-major `scaled` and `z`.
            unsafe {
                matrixmultiply::dgemm(
                    r1 - r0,
                    n,
                    r1,
                    1.0,
                    scaled.data.as_ptr().add(r0),
                    1,
                    m as isize,
                    z.data.as_ptr(),
                    m as isize,
                    1,
                    0.0,
                    out.data.as_mut_ptr().add(r0 * m),
                    m as isize,
                    1,
                );
            }
        }
    }
    mirror_lower(&mut out);
    Ok(out)
}

fn mirror_lower(a: &mut DenseMatrix) {
    let m = a.cols;
    for r in 0..m {
        for c in 0..r {
            a.data[c * m + r] = a.data[r * m + c];
        }
    }
}

/// `Zᵀ diag(w) y`.
pub fn tr_matvec_weighted(z: &DenseMatrix, w: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if w.len() != z.rows || y.len() != z.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "tr_matvec_weighted",
            left: (z.cols, z.rows),
            right: (y.len(), 1),
        });
    }
    let wy: Vec<f64> = w.iter().zip(y).map(|(a, b)| a * b).collect();
    z.tr_matvec(&wy)
}

pub(crate) fn check_weights(w: &[f64]) -> Result<()> {
    match w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(index) => Err(LinalgError::InvalidWeight {
            index,
            value: w[index],
        }),
        None => Ok(()),
    }
}

/// Returns `a + lambda I`.
pub fn add_ridge(a: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    let mut out = a.clone();
    add_ridge_in_place(&mut out, lambda)?;
    Ok(out)
}

pub fn add_ridge_in_place(a: &mut DenseMatrix, lambda: f64) -> Result<()> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare {
            op: "add_ridge",
            rows: a.rows,
            cols: a.cols,
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(LinalgError::InvalidRidge(lambda));
    }
    let n = a.cols;
    for i in 0..n {
        a.data[i * n + i] += lambda;
    }
    Ok(())
}

/// Solves `a x = rhs` for symmetric positive-definite `a`.
pub fn solve_spd(a: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    Cholesky::factor(a.clone())?.solve(rhs)
}

/// Like [`solve_spd`] but factors `a` in place, avoiding a copy of large systems.
pub fn solve_spd_owned(a: DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_symmetric(&a)?;
    Cholesky::factor(a)?.solve(rhs)
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare {
            op: "solve_spd",
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.cols;
    let scale = a.max_abs();
    for r in 0..n {
        for c in 0..r {
            let (u, v) = (a.data[r * n + c], a.data[c * n + r]);
            if (u - v).abs() > 1e-12 * scale {
                return Err(LinalgError::NotSymmetric { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
///
/// Only the lower triangle of the stored matrix is meaningful.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factors `a` in place, reading only its lower triangle.
    pub fn factor(mut a: DenseMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(LinalgError::NotSquare {
                op: "cholesky",
                rows: a.rows,
                cols: a.cols,
            });
        }
        let n = a.cols;
        for kb in (0..n).step_by(BLOCK) {
            let ke = (kb + BLOCK).min(n);
            factor_diagonal_block(&mut a.data, n, kb, ke)?;
            solve_panel(&mut a.data, n, kb, ke);
            update_trailing(&mut a.data, n, kb, ke);
        }
        Ok(Self { l: a })
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.l.rows;
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "cholesky solve",
                left: (n, n),
                right: (rhs.len(), 1),
            });
        }
        let l = &self.l.data;
        // L y = b
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / l[i * n + i];
        }
        // Lᵀ x = y, column-oriented so rows of L are read contiguously
        for i in (0..n).rev() {
            y[i] /= l[i * n + i];
            let xi = y[i];
            let row = &l[i * n..i * n + i];
            axpy(-xi, row, &mut y[..i]);
        }
        Ok(y)
    }
}

fn factor_diagonal_block(a: &mut [f64], n: usize, kb: usize, ke: usize) -> Result<()> {
    for j in kb..ke {
        let (head, tail) = a.split_at_mut(j * n);
        let rowj = &mut tail[..n];
        for k in kb..j {
            let rowk = &head[k * n..k * n + n];
            let s = dot(&rowj[kb..k], &rowk[kb..k]);
            rowj[k] = (rowj[k] - s) / rowk[k];
        }
        let s = dot(&rowj[kb..j], &rowj[kb..j]);
        let pivot = rowj[j] - s;
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot });
        }
        rowj[j] = pivot.sqrt();
    }
    Ok(())
}

/// Rows below the diagonal block: `L21 = A21 L11⁻ᵀ`.
fn solve_panel(a: &mut [f64], n: usize, kb: usize, ke: usize) {
    let (top, bottom) = a.split_at_mut(ke * n);
    for rowi in bottom.chunks_exact_mut(n) {
        for j in kb..ke {
            let rowj = &top[j * n..j * n + n];
            let s = dot(&rowi[kb..j], &rowj[kb..j]);
            rowi[j] = (rowi[j] - s) / rowj[j];
        }
    }
}

/// `A22 -= L21 L21ᵀ` on the lower block triangle of the trailing matrix.
fn update_trailing(a: &mut [f64], n: usize, kb: usize, ke: usize) {
    if ke >= n {
        return;
    }
    let width = ke - kb;
    let base = a.as_mut_ptr();
    for r0 in (ke..n).step_by(BLOCK) {
        let r1 = (r0 + BLOCK).min(n);
        // SAFETY: the read panel (columns kb..ke) and the written block
        // (columns ke..r1, rows r0..r1) are disjoint regions of `a`, and every
        // address stays below n*n.
        unsafe {
            matrixmultiply::dgemm(
                r1 - r0,
                width,
                r1 - ke,
                -1.0,
                base.add(r0 * n + kb),
                n as isize,
                1,
                base.add(ke * n + kb),
                1,
                n as isize,
                1.0,
                base.add(r0 * n + ke),
                n as isize,
                1,
            );
        }
    }
}
