//! First- and second-moment estimators.
//!
//! The first moment is the usual exponential moving average of gradients with
//! zero initialization and `1/(1 - beta1^t)` bias correction.
//!
//! The second moment is kept as a rank-one factorization `p q^T` instead of a
//! dense matrix. On even internal steps `p` moves toward the least-squares
//! solution of `min_p ||V - p q^T||_F^2` with `q` held fixed, on odd steps the
//! roles swap. The closed-form targets are `V q / ||q||^2` and
//! `V^T p / ||p||^2`; both are computed by streaming over the input matrix and
//! squaring entries on the fly, so no `m x n` temporary is ever allocated and
//! the factorization error is non-increasing at every step. Factors stay
//! entry-wise nonnegative because each update is a convex combination of
//! nonnegative terms.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fmath;
use crate::matrix::{vec_sq_norm, Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq)]
pub enum MomentError {
    /// Bias-corrected read before the first accumulation (the correction
    /// divides by `1 - beta^0 = 0`).
    NoUpdatesYet,
    /// Decay parameter outside `[0, 1)`.
    BadDecay { name: &'static str, value: f64 },
    /// Factor vectors must be entry-wise nonnegative.
    NegativeFactor { index: usize, value: f64 },
    Matrix(MatrixError),
}

impl fmt::Display for MomentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentError::NoUpdatesYet => {
                write!(f, "bias-corrected estimate requested before any update")
            }
            MomentError::BadDecay { name, value } => {
                write!(f, "decay parameter {name}={value} outside [0, 1)")
            }
            MomentError::NegativeFactor { index, value } => {
                write!(f, "factor entry {value} at index {index} is negative")
            }
            MomentError::Matrix(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MomentError {}

impl From<MatrixError> for MomentError {
    fn from(e: MatrixError) -> Self {
        MomentError::Matrix(e)
    }
}

fn check_decay(name: &'static str, value: f64) -> Result<(), MomentError> {
    if !(0.0..1.0).contains(&value) {
        return Err(MomentError::BadDecay { name, value });
    }
    Ok(())
}

/// Exponential moving average of gradients with zero initialization.
#[derive(Debug, Clone)]
pub struct FirstMoment {
    buf: Matrix,
    beta1: f64,
    steps: u64,
}

impl FirstMoment {
    pub fn new(rows: usize, cols: usize, beta1: f64) -> Result<Self, MomentError> {
        check_decay("beta1", beta1)?;
        Ok(FirstMoment {
            buf: Matrix::zeros(rows, cols)?,
            beta1,
            steps: 0,
        })
    }

    /// `buf <- beta1 * buf + (1 - beta1) * grad`; one call per step.
    pub fn accumulate(&mut self, grad: &Matrix) -> Result<(), MomentError> {
        self.buf.ema_assign(self.beta1, grad)?;
        self.steps += 1;
        Ok(())
    }

    /// Bias-corrected estimate `buf / (1 - beta1^t)`.
    pub fn bias_corrected(&self) -> Result<Matrix, MomentError> {
        let mut out = self.buf.clone();
        out.scale_assign(self.correction_factor()?);
        Ok(out)
    }

    /// The scalar `1 / (1 - beta1^t)` applied by [`FirstMoment::bias_corrected`].
    pub fn correction_factor(&self) -> Result<f64, MomentError> {
        if self.steps == 0 {
            return Err(MomentError::NoUpdatesYet);
        }
        Ok(1.0 / (1.0 - fmath::powu(self.beta1, self.steps)))
    }

    pub fn raw(&self) -> &Matrix {
        &self.buf
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }
}

/// Rank-one second-moment state: factors `p`, `q`, the initialization level
/// `v0`, and the internal step counter that drives the even/odd alternation.
#[derive(Debug, Clone)]
pub struct SecondMomentFactors {
    p: Vec<f64>,
    q: Vec<f64>,
    v0: f64,
    beta2: f64,
    updates: u64,
}

impl SecondMomentFactors {
    /// Initialize from the first gradient: `v0 = ||g0||_F^2 / (m n)` and both
    /// factors uniform at `sqrt(v0)`, so `p q^T` starts at `v0` everywhere. A
    /// zero gradient is allowed and yields zero factors.
    pub fn init_from_gradient(g0: &Matrix, beta2: f64) -> Result<Self, MomentError> {
        check_decay("beta2", beta2)?;
        let (rows, cols) = g0.dims();
        let v0 = g0.sq_sum() / (rows * cols) as f64;
        let root = fmath::sqrt(v0);
        Ok(SecondMomentFactors {
            p: vec![root; rows],
            q: vec![root; cols],
            v0,
            beta2,
            updates: 0,
        })
    }

    /// Build a state from explicit parts. Factors must be nonnegative.
    pub fn from_parts(
        p: Vec<f64>,
        q: Vec<f64>,
        v0: f64,
        beta2: f64,
        updates: u64,
    ) -> Result<Self, MomentError> {
        check_decay("beta2", beta2)?;
        if v0 < 0.0 {
            return Err(MomentError::NegativeFactor {
                index: usize::MAX,
                value: v0,
            });
        }
        for (index, &value) in p.iter().chain(q.iter()).enumerate() {
            if value < 0.0 {
                return Err(MomentError::NegativeFactor { index, value });
            }
        }
        if p.is_empty() || q.is_empty() {
            return Err(MomentError::Matrix(MatrixError::EmptyDims {
                rows: p.len(),
                cols: q.len(),
            }));
        }
        Ok(SecondMomentFactors {
            p,
            q,
            v0,
            beta2,
            updates,
        })
    }

    /// One alternating step toward `V = mtilde^2`.
    pub fn alternating_update(&mut self, mtilde: &Matrix, eps: f64) -> Result<(), MomentError> {
        self.alternating_update_scaled(mtilde, 1.0, eps)
    }

    /// Same as [`SecondMomentFactors::alternating_update`] with the target
    /// `V = (scale * m)^2`. The scale lets callers keep an uncorrected buffer
    /// and fold the bias-correction factor in without materializing the
    /// corrected matrix.
    ///
    /// Even step: `p <- beta2 * p + (1 - beta2) * V q / (||q||^2 + eps)`.
    /// Odd step: `q <- beta2 * q + (1 - beta2) * V^T p / (||p||^2 + eps)`.
    /// `V` is consumed as a streaming pass over `m`; transient memory is
    /// `O(1)` beyond the factors themselves.
    pub fn alternating_update_scaled(
        &mut self,
        m: &Matrix,
        scale: f64,
        eps: f64,
    ) -> Result<(), MomentError> {
        let (rows, cols) = m.dims();
        if rows != self.p.len() || cols != self.q.len() {
            return Err(MomentError::Matrix(MatrixError::DimMismatch {
                op: "alternating_update",
                lhs: (self.p.len(), self.q.len()),
                rhs: (rows, cols),
            }));
        }
        let sq_scale = scale * scale;
        if self.updates % 2 == 0 {
            let denom = vec_sq_norm(&self.q) + eps;
            let mix = (1.0 - self.beta2) * sq_scale / denom;
            for (i, pi) in self.p.iter_mut().enumerate() {
                let row = m.row(i);
                let mut dot = 0.0;
                for (a, qj) in row.iter().zip(&self.q) {
                    dot += a * a * qj;
                }
                *pi = self.beta2 * *pi + mix * dot;
            }
        } else {
            let denom = vec_sq_norm(&self.p) + eps;
            let mix = (1.0 - self.beta2) * sq_scale / denom;
            // Column pass over row-major data: decay q first, then accumulate
            // the weighted squared rows into it.
            for qj in self.q.iter_mut() {
                *qj *= self.beta2;
            }
            for (i, &pi) in self.p.iter().enumerate() {
                let row = m.row(i);
                let w = mix * pi;
                for (qj, a) in self.q.iter_mut().zip(row) {
                    *qj += w * a * a;
                }
            }
        }
        self.updates += 1;
        Ok(())
    }

    /// Bias-corrected view `(p_i q_j - beta2^t v0) / (1 - beta2^t)`, clamped
    /// below at zero. Requires at least one update.
    pub fn corrected(&self) -> Result<CorrectedSecondMoment<'_>, MomentError> {
        if self.updates == 0 {
            return Err(MomentError::NoUpdatesYet);
        }
        let pow = fmath::powu(self.beta2, self.updates);
        Ok(CorrectedSecondMoment {
            p: &self.p,
            q: &self.q,
            subtract: pow * self.v0,
            inv_denom: 1.0 / (1.0 - pow),
        })
    }

    /// Materialized bias-corrected matrix; for tests and dense baselines.
    /// The optimizer itself reads entries through [`SecondMomentFactors::corrected`].
    pub fn reconstruct_corrected(&self) -> Result<Matrix, MomentError> {
        let view = self.corrected()?;
        let mut out = Matrix::zeros(self.p.len(), self.q.len())?;
        for i in 0..self.p.len() {
            for j in 0..self.q.len() {
                out.set(i, j, view.entry(i, j));
            }
        }
        Ok(out)
    }

    pub fn factor_p(&self) -> &[f64] {
        &self.p
    }

    pub fn factor_q(&self) -> &[f64] {
        &self.q
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }
}

/// Read-only bias-corrected second moment, evaluated entry by entry.
pub struct CorrectedSecondMoment<'a> {
    p: &'a [f64],
    q: &'a [f64],
    subtract: f64,
    inv_denom: f64,
}

impl CorrectedSecondMoment<'_> {
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let u = (self.p[i] * self.q[j] - self.subtract) * self.inv_denom;
        if u > 0.0 {
            u
        } else {
            0.0
        }
    }
}
