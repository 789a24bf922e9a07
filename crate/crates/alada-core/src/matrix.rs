//! Dense row-major matrices and the small set of kernels the optimizers need.
//!
//! Everything is `f64`. A vector is just a slice; matrix-shaped values own
//! their storage. Binary operations check shapes and report domain problems
//! (negative square roots, zero divisors) as errors instead of producing
//! silent NaNs. Operations that the optimizers run in their inner loops have
//! in-place variants so a step can stay within an `O(m + n)` transient
//! footprint.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fmath;

/// Errors from shape or domain violations in matrix kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixError {
    /// Two operands had incompatible shapes.
    DimMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// A vector operand had the wrong length.
    VecLenMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    /// Element-wise square root of a negative entry.
    NegativeSqrt { row: usize, col: usize, value: f64 },
    /// Element-wise division by an exactly-zero entry.
    ZeroDivisor { row: usize, col: usize },
    /// Zero rows or columns requested.
    EmptyDims { rows: usize, cols: usize },
    /// Backing data length does not equal `rows * cols`.
    DataLen {
        rows: usize,
        cols: usize,
        len: usize,
    },
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixError::DimMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: dimension mismatch {}x{} vs {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            MatrixError::VecLenMismatch { op, expected, got } => {
                write!(f, "{op}: vector length {got}, expected {expected}")
            }
            MatrixError::NegativeSqrt { row, col, value } => {
                write!(f, "sqrt of negative entry {value} at ({row}, {col})")
            }
            MatrixError::ZeroDivisor { row, col } => {
                write!(f, "division by zero entry at ({row}, {col})")
            }
            MatrixError::EmptyDims { rows, cols } => {
                write!(f, "matrix dimensions must be positive, got {rows}x{cols}")
            }
            MatrixError::DataLen { rows, cols, len } => {
                write!(f, "data length {len} does not match {rows}x{cols}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MatrixError {}

/// Dense row-major matrix of `f64` with at least one row and one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, MatrixError> {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDims { rows, cols });
        }
        Ok(Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDims { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::DataLen {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, MatrixError> {
        let mut m = Matrix::zeros(rows, cols)?;
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        Ok(m)
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
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // rows >= 1 and cols >= 1 by construction
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Consumes the matrix, handing back its storage (row-major).
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn check_same_dims(&self, other: &Matrix, op: &'static str) -> Result<(), MatrixError> {
        if self.dims() != other.dims() {
            return Err(MatrixError::DimMismatch {
                op,
                lhs: self.dims(),
                rhs: other.dims(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.check_same_dims(other, "add")?;
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.check_same_dims(other, "sub")?;
        let mut out = self.clone();
        out.sub_assign(other)?;
        Ok(out)
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.check_same_dims(other, "mul")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }

    /// Element-wise division. Any exactly-zero divisor entry is an error.
    pub fn div(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.check_same_dims(other, "div")?;
        for (idx, &b) in other.data.iter().enumerate() {
            if b == 0.0 {
                return Err(MatrixError::ZeroDivisor {
                    row: idx / self.cols,
                    col: idx % self.cols,
                });
            }
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a / b)
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }

    pub fn square(&self) -> Matrix {
        let data = self.data.iter().map(|a| a * a).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Element-wise square root. Any negative entry is an error.
    pub fn sqrt(&self) -> Result<Matrix, MatrixError> {
        for (idx, &a) in self.data.iter().enumerate() {
            if a < 0.0 {
                return Err(MatrixError::NegativeSqrt {
                    row: idx / self.cols,
                    col: idx % self.cols,
                    value: a,
                });
            }
        }
        let data = self.data.iter().map(|a| fmath::sqrt(*a)).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Element-wise `max(entry, floor)`.
    pub fn max_scalar(&self, floor: f64) -> Matrix {
        let data = self
            .data
            .iter()
            .map(|a| if *a > floor { *a } else { floor })
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<(), MatrixError> {
        self.check_same_dims(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &Matrix) -> Result<(), MatrixError> {
        self.check_same_dims(other, "sub_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(())
    }

    pub fn scale_assign(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    pub fn fill(&mut self, value: f64) {
        for a in &mut self.data {
            *a = value;
        }
    }

    /// `self <- decay * self + (1 - decay) * other`, the moving-average
    /// primitive shared by every momentum rule here.
    pub fn ema_assign(&mut self, decay: f64, other: &Matrix) -> Result<(), MatrixError> {
        self.check_same_dims(other, "ema_assign")?;
        let w = 1.0 - decay;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = decay * *a + w * b;
        }
        Ok(())
    }

    /// `A v` for a length-`cols` vector.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if v.len() != self.cols {
            return Err(MatrixError::VecLenMismatch {
                op: "matvec",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// `A^T u` for a length-`rows` vector.
    pub fn matvec_t(&self, u: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if u.len() != self.rows {
            return Err(MatrixError::VecLenMismatch {
                op: "matvec_t",
                expected: self.rows,
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let ui = u[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += ui * a;
            }
        }
        Ok(out)
    }

    /// `(A ∘ A) v` streamed over rows: the entries of `A` are squared on the
    /// fly, so the squared matrix is never materialized.
    pub fn sq_matvec(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if v.len() != self.cols {
            return Err(MatrixError::VecLenMismatch {
                op: "sq_matvec",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * a * b;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// `(A ∘ A)^T u` streamed, see [`Matrix::sq_matvec`].
    pub fn sq_matvec_t(&self, u: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if u.len() != self.rows {
            return Err(MatrixError::VecLenMismatch {
                op: "sq_matvec_t",
                expected: self.rows,
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let ui = u[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * a * ui;
            }
        }
        Ok(out)
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        fmath::sqrt(self.sq_sum())
    }

    /// Sum of squared entries.
    pub fn sq_sum(&self) -> f64 {
        let mut acc = 0.0;
        for a in &self.data {
            acc += a * a;
        }
        acc
    }

    /// Largest absolute entry.
    pub fn inf_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for a in &self.data {
            let v = a.abs();
            if v > best {
                best = v;
            }
        }
        best
    }
}

/// Outer product `p q^T`.
pub fn outer(p: &[f64], q: &[f64]) -> Result<Matrix, MatrixError> {
    if p.is_empty() || q.is_empty() {
        return Err(MatrixError::EmptyDims {
            rows: p.len(),
            cols: q.len(),
        });
    }
    let mut data = Vec::with_capacity(p.len() * q.len());
    for &pi in p {
        for &qj in q {
            data.push(pi * qj);
        }
    }
    Matrix::from_vec(p.len(), q.len(), data)
}

/// Squared 2-norm of a vector.
pub fn vec_sq_norm(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for a in v {
        acc += a * a;
    }
    acc
}

/// Dot product; lengths must already agree.
pub fn vec_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
