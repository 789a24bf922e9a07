//! Folding order-τ tensors into matrices whose two sides are as balanced as
//! possible, so the rank-one second-moment factors stay small relative to the
//! parameter count. Data is row-major and contiguous, so the fold is a pure
//! reinterpretation of dimensions; no element moves.

use alloc::vec::Vec;
use core::fmt;

use crate::matrix::{Matrix, MatrixError};

/// Ordered tensor dimensions, all positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReshapeError {
    /// Shapes need at least one dimension and no zero extents.
    BadShape { position: usize, extent: usize },
    EmptyShape,
    /// Tensor data length disagrees with the shape element count.
    DataLen { expected: usize, got: usize },
    Matrix(MatrixError),
}

impl fmt::Display for ReshapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReshapeError::BadShape { position, extent } => {
                write!(f, "shape extent {extent} at position {position} must be >= 1")
            }
            ReshapeError::EmptyShape => write!(f, "shape needs at least one dimension"),
            ReshapeError::DataLen { expected, got } => {
                write!(f, "tensor data length {got}, shape wants {expected}")
            }
            ReshapeError::Matrix(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReshapeError {}

impl From<MatrixError> for ReshapeError {
    fn from(e: MatrixError) -> Self {
        ReshapeError::Matrix(e)
    }
}

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self, ReshapeError> {
        if dims.is_empty() {
            return Err(ReshapeError::EmptyShape);
        }
        for (position, &extent) in dims.iter().enumerate() {
            if extent == 0 {
                return Err(ReshapeError::BadShape { position, extent });
            }
        }
        Ok(Shape {
            dims: dims.to_vec(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Result of planning a tensor-to-matrix fold: dimensions `1..=split` merge
/// into the rows, the rest into the columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReshapePlan {
    /// Number of leading dimensions merged into the row extent (1-based
    /// split index; a vector plans as `len x 1` with `split = order`).
    pub split: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Choose the split minimizing `|rows - cols|` over all interior splits,
/// smallest split on ties. Order-1 shapes fold to `len x 1`.
pub fn plan_reshape(shape: &Shape) -> ReshapePlan {
    let dims = shape.dims();
    if dims.len() == 1 {
        return ReshapePlan {
            split: 1,
            rows: dims[0],
            cols: 1,
        };
    }
    let mut best: Option<ReshapePlan> = None;
    let mut best_gap = usize::MAX;
    for split in 1..dims.len() {
        let rows: usize = dims[..split].iter().product();
        let cols: usize = dims[split..].iter().product();
        let gap = rows.abs_diff(cols);
        if gap < best_gap {
            best_gap = gap;
            best = Some(ReshapePlan { split, rows, cols });
        }
    }
    best.expect("order >= 2 has at least one split")
}

/// Row-major tensor owning its storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self, ReshapeError> {
        if data.len() != shape.element_count() {
            return Err(ReshapeError::DataLen {
                expected: shape.element_count(),
                got: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.element_count();
        Tensor {
            shape,
            data: alloc::vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Fold into the planned matrix. The storage moves; nothing is copied.
    pub fn into_matrix(self, plan: ReshapePlan) -> Result<Matrix, ReshapeError> {
        Ok(Matrix::from_vec(plan.rows, plan.cols, self.data)?)
    }

    /// Inverse of [`Tensor::into_matrix`] for the same shape.
    pub fn from_matrix(matrix: Matrix, shape: Shape) -> Result<Self, ReshapeError> {
        Tensor::new(shape, matrix.into_vec())
    }
}
