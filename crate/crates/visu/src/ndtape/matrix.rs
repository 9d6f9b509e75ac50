//! Dense row-major matrices of 64-bit floats.
//!
//! All reductions run in a single fixed order (row-major, ascending index)
//! so repeated evaluations are bit-identical regardless of context.

use std::sync::Arc;

use super::NdError;

/// Dense `rows x cols` matrix, row-major, `f64` storage.
///
/// Storage is shared on clone; matrices are immutable through the public
/// API once constructed, so sharing is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Arc<Vec<f64>>,
}

impl Matrix {
    /// Builds a matrix from row-major data. The data length must equal
    /// `rows * cols` and every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NdError> {
        if data.len() != rows * cols {
            return Err(NdError::BadLength { op: "new", len: data.len(), rows, cols });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(NdError::NonFinite { op: "new", detail: format!("entry {idx}") });
        }
        Ok(Self { rows, cols, data: Arc::new(data) })
    }

    /// Builds without the finiteness scan. For internal kernels whose
    /// inputs are already validated.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data: Arc::new(data) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![1.0; rows * cols])
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self::from_raw(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_raw(n, n, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::from_raw(rows, cols, data)
    }

    /// 1x1 matrix holding one scalar.
    pub fn scalar(v: f64) -> Self {
        Self::from_raw(1, 1, vec![v])
    }

    /// Row vector from a slice.
    pub fn row_vector(values: &[f64]) -> Self {
        Self::from_raw(1, values.len(), values.to_vec())
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of {:?}", self.shape());
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        assert!(r < self.rows, "row {r} out of {:?}", self.shape());
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The value of a 1x1 matrix.
    pub fn item(&self) -> f64 {
        assert_eq!(self.shape(), (1, 1), "item() requires a 1x1 matrix");
        self.data[0]
    }

    /// Mutable access to the underlying data. Clones the storage if shared.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.data).as_mut_slice()
    }

    /// Returns a copy with `f` applied to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    fn require_same_shape(&self, other: &Matrix, op: &'static str) -> Result<(), NdError> {
        if self.shape() != other.shape() {
            return Err(NdError::ShapeMismatch { op, lhs: self.shape(), rhs: other.shape() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, NdError> {
        self.require_same_shape(other, "add")?;
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a + b).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, NdError> {
        self.require_same_shape(other, "sub")?;
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a - b).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    /// Elementwise (Hadamard) product.
    pub fn elem_mul(&self, other: &Matrix) -> Result<Matrix, NdError> {
        self.require_same_shape(other, "mul")?;
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    pub fn neg(&self) -> Matrix {
        self.map(|v| -v)
    }

    /// In-place `self += factor * other`. Used only by gradient
    /// accumulators and optimizers; shapes must already match.
    pub(crate) fn axpy(&mut self, factor: f64, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        let dst = self.data_mut();
        for (d, s) in dst.iter_mut().zip(other.data.iter()) {
            *d += factor * s;
        }
    }

    /// Matrix product `self @ other`. i-k-j loop order, accumulation over
    /// ascending k only.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NdError> {
        if self.cols != other.rows {
            return Err(NdError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let (m, k_dim, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a_row = &self.data[i * k_dim..(i + 1) * k_dim];
            let out_row = &mut out[i * n..(i + 1) * n];
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b_kj) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ik * b_kj;
                }
            }
        }
        Ok(Matrix::from_raw(m, n, out))
    }

    /// `self @ other^T` without materializing the transpose.
    pub fn matmul_nt(&self, other: &Matrix) -> Result<Matrix, NdError> {
        if self.cols != other.cols {
            return Err(NdError::ShapeMismatch {
                op: "matmul_nt",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let (m, k_dim, n) = (self.rows, self.cols, other.rows);
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            let a_row = &self.data[i * k_dim..(i + 1) * k_dim];
            for j in 0..n {
                let b_row = &other.data[j * k_dim..(j + 1) * k_dim];
                let mut acc = 0.0;
                for (a, b) in a_row.iter().zip(b_row.iter()) {
                    acc += a * b;
                }
                out.push(acc);
            }
        }
        Ok(Matrix::from_raw(m, n, out))
    }

    /// `self^T @ other` without materializing the transpose.
    pub fn matmul_tn(&self, other: &Matrix) -> Result<Matrix, NdError> {
        if self.rows != other.rows {
            return Err(NdError::ShapeMismatch {
                op: "matmul_tn",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let (m, k_dim, n) = (self.cols, self.rows, other.cols);
        let mut out = vec![0.0; m * n];
        for k in 0..k_dim {
            let a_row = &self.data[k * m..(k + 1) * m];
            let b_row = &other.data[k * n..(k + 1) * n];
            for (i, &a_ki) in a_row.iter().enumerate() {
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &b_kj) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ki * b_kj;
                }
            }
        }
        Ok(Matrix::from_raw(m, n, out))
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.data[r * self.cols + c]);
            }
        }
        Matrix::from_raw(self.cols, self.rows, out)
    }

    /// Sum of all entries, row-major order.
    pub fn sum(&self) -> f64 {
        let mut acc = 0.0;
        for &v in self.data.iter() {
            acc += v;
        }
        acc
    }

    /// Dot product of two rows taken from this matrix and another.
    pub fn row_dot(&self, r: usize, other: &Matrix, s: usize) -> f64 {
        debug_assert_eq!(self.cols, other.cols);
        let mut acc = 0.0;
        for (a, b) in self.row(r).iter().zip(other.row(s).iter()) {
            acc += a * b;
        }
        acc
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Rectangular copy of `rows x cols` starting at `(row0, col0)`.
    pub fn slice(
        &self,
        row0: usize,
        rows: usize,
        col0: usize,
        cols: usize,
    ) -> Result<Matrix, NdError> {
        if row0 + rows > self.rows || col0 + cols > self.cols {
            return Err(NdError::SliceBounds {
                row0,
                row1: row0 + rows,
                col0,
                col1: col0 + cols,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in row0..row0 + rows {
            out.extend_from_slice(&self.data[r * self.cols + col0..r * self.cols + col0 + cols]);
        }
        Ok(Matrix::from_raw(rows, cols, out))
    }

    /// Row-wise softmax with per-row max subtraction.
    pub fn softmax_rows(&self) -> Matrix {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            let row = self.row(r);
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut denom = 0.0;
            let start = out.len();
            for &v in row {
                let e = (v - max).exp();
                denom += e;
                out.push(e);
            }
            for v in &mut out[start..] {
                *v /= denom;
            }
        }
        Matrix::from_raw(self.rows, self.cols, out)
    }

    /// True when every pairwise difference is within `tol` in absolute value.
    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity_is_identity() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let i = Matrix::identity(2);
        assert_eq!(i.matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&i).unwrap(), a);
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "message should carry shapes: {msg}");
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let a = Matrix::from_fn(3, 4, |r, c| (r * 7 + c) as f64 * 0.3 - 1.0);
        let b = Matrix::from_fn(2, 4, |r, c| (r * 5 + c) as f64 * 0.7 - 2.0);
        let via_t = a.matmul(&b.transpose()).unwrap();
        assert!(a.matmul_nt(&b).unwrap().approx_eq(&via_t, 1e-12));
        let c = Matrix::from_fn(3, 2, |r, c| (r + c) as f64);
        let via_t2 = a.transpose().matmul(&c).unwrap();
        assert!(a.matmul_tn(&c).unwrap().approx_eq(&via_t2, 1e-12));
    }

    #[test]
    fn non_finite_data_is_rejected() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let m = Matrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        let s = m.softmax_rows();
        assert!(s.approx_eq(&Matrix::new(1, 2, vec![0.5, 0.5]).unwrap(), 1e-15));
    }

    #[test]
    fn sum_is_deterministic() {
        let m = Matrix::from_fn(17, 13, |r, c| ((r * 31 + c * 17) % 97) as f64 * 0.123);
        let a = m.sum();
        let b = m.sum();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
