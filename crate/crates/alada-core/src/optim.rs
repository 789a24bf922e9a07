//! Optimizers sharing one step interface: Alada (alternating rank-one
//! second-moment adaptation with the first moment kept in the gradient
//! buffer), Adam, Adafactor, and plain SGD, plus step-size schedules and the
//! decay-parameter mapping between Adam and Alada.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fmath;
use crate::matrix::{Matrix, MatrixError};
use crate::moment::{MomentError, SecondMomentFactors};

#[derive(Debug, Clone, PartialEq)]
pub enum OptimError {
    /// A config field failed validation; carries the field name.
    BadConfig { field: &'static str, value: f64 },
    /// Step index at or past the schedule horizon.
    StepPastHorizon { step: u64, horizon: u64 },
    /// The Adam-to-Alada decay mapping has no solution in `[0, 1)`.
    InfeasibleBetaMapping { would_be_beta2: f64 },
    Matrix(MatrixError),
    Moment(MomentError),
}

impl fmt::Display for OptimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimError::BadConfig { field, value } => {
                write!(f, "invalid config field {field}: {value}")
            }
            OptimError::StepPastHorizon { step, horizon } => {
                write!(f, "step {step} outside schedule horizon {horizon}")
            }
            OptimError::InfeasibleBetaMapping { would_be_beta2 } => write!(
                f,
                "beta mapping infeasible: implied beta2 = {would_be_beta2} < 0"
            ),
            OptimError::Matrix(e) => write!(f, "{e}"),
            OptimError::Moment(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OptimError {}

impl From<MatrixError> for OptimError {
    fn from(e: MatrixError) -> Self {
        OptimError::Matrix(e)
    }
}

impl From<MomentError> for OptimError {
    fn from(e: MomentError) -> Self {
        OptimError::Moment(e)
    }
}

/// Step-size schedules. `LinearDecay` is the default for experiments;
/// `Theorem` matches the schedule the convergence bound assumes;
/// `PaperLiteral` is `eta0 / (1 - t/T)`, which grows with `t` and is kept
/// only for completeness, never as a default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Constant,
    LinearDecay,
    Theorem,
    PaperLiteral,
}

/// Where the regularizer sits in the denominator of the descent step:
/// inside the square root (`1/sqrt(u + eps)`) or outside (`1/(sqrt(u) + eps)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsPlacement {
    InsideSqrt,
    OutsideSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub eta0: f64,
    pub schedule: Schedule,
    /// Total number of steps the schedule is defined over.
    pub horizon: u64,
    pub eps_placement: EpsPlacement,
}

impl OptimizerConfig {
    /// Alada defaults: beta1 = beta2 = 0.9, eps = 1e-16 inside the root.
    pub fn alada() -> Self {
        OptimizerConfig {
            beta1: 0.9,
            beta2: 0.9,
            eps: 1e-16,
            eta0: 0.01,
            schedule: Schedule::LinearDecay,
            horizon: 1,
            eps_placement: EpsPlacement::InsideSqrt,
        }
    }

    /// Stock Adam defaults: beta1 = 0.9, beta2 = 0.999, eps = 1e-8 outside.
    pub fn adam() -> Self {
        OptimizerConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            eta0: 0.01,
            schedule: Schedule::LinearDecay,
            horizon: 1,
            eps_placement: EpsPlacement::OutsideSqrt,
        }
    }

    /// Adafactor defaults: first moment disabled, beta2 = 0.999, eps = 1e-8
    /// inside the root.
    pub fn adafactor() -> Self {
        OptimizerConfig {
            beta1: 0.0,
            beta2: 0.999,
            eps: 1e-8,
            eta0: 0.01,
            schedule: Schedule::LinearDecay,
            horizon: 1,
            eps_placement: EpsPlacement::InsideSqrt,
        }
    }

    pub fn sgd() -> Self {
        OptimizerConfig {
            beta1: 0.0,
            beta2: 0.0,
            eps: 1e-8,
            eta0: 0.01,
            schedule: Schedule::LinearDecay,
            horizon: 1,
            eps_placement: EpsPlacement::InsideSqrt,
        }
    }

    pub fn with_eta(mut self, eta0: f64) -> Self {
        self.eta0 = eta0;
        self
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule, horizon: u64) -> Self {
        self.schedule = schedule;
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(OptimError::BadConfig {
                field: "beta1",
                value: self.beta1,
            });
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(OptimError::BadConfig {
                field: "beta2",
                value: self.beta2,
            });
        }
        if !(self.eps > 0.0) {
            return Err(OptimError::BadConfig {
                field: "eps",
                value: self.eps,
            });
        }
        if !(self.eta0 > 0.0) {
            return Err(OptimError::BadConfig {
                field: "eta0",
                value: self.eta0,
            });
        }
        if self.horizon == 0 {
            return Err(OptimError::BadConfig {
                field: "horizon",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// `eta_t` for step `t` of `horizon` total steps. Errors when `t >= horizon`.
pub fn step_size(
    schedule: Schedule,
    eta0: f64,
    beta1: f64,
    t: u64,
    horizon: u64,
) -> Result<f64, OptimError> {
    if t >= horizon {
        return Err(OptimError::StepPastHorizon { step: t, horizon });
    }
    let frac = t as f64 / horizon as f64;
    Ok(match schedule {
        Schedule::Constant => eta0,
        Schedule::LinearDecay => eta0 * (1.0 - frac),
        Schedule::Theorem => eta0 * (1.0 - fmath::powu(beta1, t + 1)),
        Schedule::PaperLiteral => eta0 / (1.0 - frac),
    })
}

/// Map stock Adam decay parameters onto this library's Alada parameters so
/// the newest squared gradient carries the same weight in both second-moment
/// estimates: `beta1` is shared and `(1 - beta2)(1 - beta1)^2 = 1 - beta2_adam`.
pub fn map_adam_betas(beta1_adam: f64, beta2_adam: f64) -> Result<(f64, f64), OptimError> {
    if !(0.0..1.0).contains(&beta1_adam) {
        return Err(OptimError::BadConfig {
            field: "beta1_adam",
            value: beta1_adam,
        });
    }
    if !(0.0..1.0).contains(&beta2_adam) {
        return Err(OptimError::BadConfig {
            field: "beta2_adam",
            value: beta2_adam,
        });
    }
    let one_minus = 1.0 - beta1_adam;
    let beta2 = 1.0 - (1.0 - beta2_adam) / (one_minus * one_minus);
    if beta2 < 0.0 {
        // Exactly-zero mappings land a few ulps below zero; only genuinely
        // negative solutions are infeasible.
        if beta2 > -1e-9 {
            return Ok((beta1_adam, 0.0));
        }
        return Err(OptimError::InfeasibleBetaMapping {
            would_be_beta2: beta2,
        });
    }
    Ok((beta1_adam, beta2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Alada,
    Adam,
    Adafactor,
    Sgd,
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Alada => "alada",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adafactor => "adafactor",
            OptimizerKind::Sgd => "sgd",
        }
    }

    pub fn default_config(&self) -> OptimizerConfig {
        match self {
            OptimizerKind::Alada => OptimizerConfig::alada(),
            OptimizerKind::Adam => OptimizerConfig::adam(),
            OptimizerKind::Adafactor => OptimizerConfig::adafactor(),
            OptimizerKind::Sgd => OptimizerConfig::sgd(),
        }
    }
}

/// Persistent optimizer state, in scalars, for an `m x n` parameter. Counts
/// only what must survive across steps; the gradient slot is excluded.
pub fn state_scalar_count(kind: OptimizerKind, m: usize, n: usize) -> u64 {
    let (m, n) = (m as u64, n as u64);
    match kind {
        OptimizerKind::Adam => 2 * m * n + 1,
        OptimizerKind::Adafactor => m + n + 1,
        OptimizerKind::Alada => m + n + 2,
        OptimizerKind::Sgd => 0,
    }
}

/// A single-parameter optimizer. `step` owns the descent update for one
/// `m x n` matrix; states for distinct parameters are independent.
pub trait Optimizer {
    /// Advance one step. `grad` carries the raw gradient for Adam, Adafactor
    /// and SGD; for Alada it is the fused momentum buffer (see
    /// [`Optimizer::accumulate_decay`]) and is rescaled in place on the very
    /// first step.
    fn step(&mut self, x: &mut Matrix, grad: &mut Matrix) -> Result<(), OptimError>;

    /// Decay factor the training loop must use when folding the next raw
    /// gradient into the buffer before calling [`Optimizer::step`]: zero for
    /// everything except Alada past its first step.
    fn accumulate_decay(&self) -> f64;

    fn state_scalars(&self) -> u64;

    fn kind(&self) -> OptimizerKind;

    /// Steps taken so far.
    fn steps_taken(&self) -> u64;
}

pub fn make_optimizer(
    kind: OptimizerKind,
    cfg: OptimizerConfig,
    rows: usize,
    cols: usize,
) -> Result<Box<dyn Optimizer>, OptimError> {
    cfg.validate()?;
    Ok(match kind {
        OptimizerKind::Alada => Box::new(Alada::new(cfg, rows, cols)),
        OptimizerKind::Adam => Box::new(Adam::new(cfg, rows, cols)?),
        OptimizerKind::Adafactor => Box::new(Adafactor::new(cfg, rows, cols)),
        OptimizerKind::Sgd => Box::new(Sgd::new(cfg)),
    })
}

/// Alternating rank-one adaptation. Persistent state is the factor pair plus
/// `v0` and the step counter; the first moment lives in the caller's gradient
/// buffer. A step touches no `m x n` storage beyond `x` and `grad`.
pub struct Alada {
    cfg: OptimizerConfig,
    rows: usize,
    cols: usize,
    factors: Option<SecondMomentFactors>,
    t: u64,
}

impl Alada {
    pub fn new(cfg: OptimizerConfig, rows: usize, cols: usize) -> Self {
        Alada {
            cfg,
            rows,
            cols,
            factors: None,
            t: 0,
        }
    }

    pub fn factors(&self) -> Option<&SecondMomentFactors> {
        self.factors.as_ref()
    }
}

impl Optimizer for Alada {
    fn step(&mut self, x: &mut Matrix, grad: &mut Matrix) -> Result<(), OptimError> {
        if x.dims() != (self.rows, self.cols) || grad.dims() != x.dims() {
            return Err(OptimError::Matrix(MatrixError::DimMismatch {
                op: "alada_step",
                lhs: x.dims(),
                rhs: grad.dims(),
            }));
        }
        let t = self.t;
        let eta = step_size(
            self.cfg.schedule,
            self.cfg.eta0,
            self.cfg.beta1,
            t,
            self.cfg.horizon,
        )?;
        if t == 0 {
            // grad holds the raw first gradient here (the loop accumulates
            // with decay zero on step 0). Initialize the factors from it,
            // then rescale the buffer so it equals the step-one momentum and
            // later accumulations continue the moving average exactly.
            self.factors = Some(SecondMomentFactors::init_from_gradient(
                grad,
                self.cfg.beta2,
            )?);
            if self.cfg.beta1 > 0.0 {
                grad.scale_assign(1.0 - self.cfg.beta1);
            }
        }
        let factors = self
            .factors
            .as_mut()
            .expect("factors initialized on step 0");

        // Bias-corrected momentum is grad * inv_bc1, applied on the fly.
        let inv_bc1 = 1.0 / (1.0 - fmath::powu(self.cfg.beta1, t + 1));
        factors.alternating_update_scaled(grad, inv_bc1, self.cfg.eps)?;

        let corrected = factors.corrected()?;
        let eps = self.cfg.eps;
        let cols = self.cols;
        let xs = x.as_mut_slice();
        let gs = grad.as_slice();
        match self.cfg.eps_placement {
            EpsPlacement::InsideSqrt => {
                for (idx, (xv, gv)) in xs.iter_mut().zip(gs).enumerate() {
                    let u = corrected.entry(idx / cols, idx % cols);
                    *xv -= eta * (gv * inv_bc1) / fmath::sqrt(u + eps);
                }
            }
            EpsPlacement::OutsideSqrt => {
                for (idx, (xv, gv)) in xs.iter_mut().zip(gs).enumerate() {
                    let u = corrected.entry(idx / cols, idx % cols);
                    *xv -= eta * (gv * inv_bc1) / (fmath::sqrt(u) + eps);
                }
            }
        }
        self.t += 1;
        Ok(())
    }

    fn accumulate_decay(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.cfg.beta1
        }
    }

    fn state_scalars(&self) -> u64 {
        state_scalar_count(OptimizerKind::Alada, self.rows, self.cols)
    }

    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Alada
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }
}

/// Stock Adam with bias correction on both moments.
pub struct Adam {
    cfg: OptimizerConfig,
    m: Matrix,
    u: Matrix,
    t: u64,
}

impl Adam {
    pub fn new(cfg: OptimizerConfig, rows: usize, cols: usize) -> Result<Self, OptimError> {
        Ok(Adam {
            cfg,
            m: Matrix::zeros(rows, cols)?,
            u: Matrix::zeros(rows, cols)?,
            t: 0,
        })
    }
}

impl Optimizer for Adam {
    fn step(&mut self, x: &mut Matrix, grad: &mut Matrix) -> Result<(), OptimError> {
        if x.dims() != self.m.dims() || grad.dims() != self.m.dims() {
            return Err(OptimError::Matrix(MatrixError::DimMismatch {
                op: "adam_step",
                lhs: x.dims(),
                rhs: grad.dims(),
            }));
        }
        let t = self.t;
        let eta = step_size(
            self.cfg.schedule,
            self.cfg.eta0,
            self.cfg.beta1,
            t,
            self.cfg.horizon,
        )?;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let inv_bc1 = 1.0 / (1.0 - fmath::powu(b1, t + 1));
        let inv_bc2 = 1.0 / (1.0 - fmath::powu(b2, t + 1));
        let eps = self.cfg.eps;
        let placement = self.cfg.eps_placement;
        for ((xv, gv), (mv, uv)) in x
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(self.m.as_mut_slice().iter_mut().zip(self.u.as_mut_slice()))
        {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *uv = b2 * *uv + (1.0 - b2) * gv * gv;
            let m_hat = *mv * inv_bc1;
            let u_hat = *uv * inv_bc2;
            let denom = match placement {
                EpsPlacement::OutsideSqrt => fmath::sqrt(u_hat) + eps,
                EpsPlacement::InsideSqrt => fmath::sqrt(u_hat + eps),
            };
            *xv -= eta * m_hat / denom;
        }
        self.t += 1;
        Ok(())
    }

    fn accumulate_decay(&self) -> f64 {
        0.0
    }

    fn state_scalars(&self) -> u64 {
        state_scalar_count(OptimizerKind::Adam, self.m.rows(), self.m.cols())
    }

    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adam
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }
}

/// Adafactor: per-step nonnegative rank-one factorization of the squared
/// gradient by row/column sums, accumulated with `beta2`; no first moment.
pub struct Adafactor {
    cfg: OptimizerConfig,
    row_acc: Vec<f64>,
    col_acc: Vec<f64>,
    t: u64,
}

impl Adafactor {
    pub fn new(cfg: OptimizerConfig, rows: usize, cols: usize) -> Self {
        Adafactor {
            cfg,
            row_acc: vec![0.0; rows],
            col_acc: vec![0.0; cols],
            t: 0,
        }
    }

    pub fn row_accumulator(&self) -> &[f64] {
        &self.row_acc
    }

    pub fn col_accumulator(&self) -> &[f64] {
        &self.col_acc
    }
}

impl Optimizer for Adafactor {
    fn step(&mut self, x: &mut Matrix, grad: &mut Matrix) -> Result<(), OptimError> {
        let (rows, cols) = (self.row_acc.len(), self.col_acc.len());
        if x.dims() != (rows, cols) || grad.dims() != (rows, cols) {
            return Err(OptimError::Matrix(MatrixError::DimMismatch {
                op: "adafactor_step",
                lhs: x.dims(),
                rhs: grad.dims(),
            }));
        }
        let eta = step_size(
            self.cfg.schedule,
            self.cfg.eta0,
            self.cfg.beta1,
            self.t,
            self.cfg.horizon,
        )?;
        let b2 = self.cfg.beta2;
        let eps = self.cfg.eps;

        // Row sums of grad^2 into the row accumulator.
        for (i, r) in self.row_acc.iter_mut().enumerate() {
            let row = grad.row(i);
            let mut s = 0.0;
            for g in row {
                s += g * g;
            }
            *r = b2 * *r + (1.0 - b2) * s;
        }
        // Column sums, streamed over rows.
        for c in self.col_acc.iter_mut() {
            *c *= b2;
        }
        let w = 1.0 - b2;
        for i in 0..rows {
            let row = grad.row(i);
            for (c, g) in self.col_acc.iter_mut().zip(row) {
                *c += w * g * g;
            }
        }

        let mut total = 0.0;
        for r in &self.row_acc {
            total += r;
        }
        // eps guards the reconstruction against an all-zero accumulator.
        let inv_total = 1.0 / (total + eps);
        let placement = self.cfg.eps_placement;
        for i in 0..rows {
            let ri = self.row_acc[i] * inv_total;
            let x_row = &mut x.as_mut_slice()[i * cols..(i + 1) * cols];
            let g_row = grad.row(i);
            for ((xv, gv), cj) in x_row.iter_mut().zip(g_row).zip(&self.col_acc) {
                let rec = ri * cj;
                let denom = match placement {
                    EpsPlacement::InsideSqrt => fmath::sqrt(rec + eps),
                    EpsPlacement::OutsideSqrt => fmath::sqrt(rec) + eps,
                };
                *xv -= eta * gv / denom;
            }
        }
        self.t += 1;
        Ok(())
    }

    fn accumulate_decay(&self) -> f64 {
        0.0
    }

    fn state_scalars(&self) -> u64 {
        state_scalar_count(
            OptimizerKind::Adafactor,
            self.row_acc.len(),
            self.col_acc.len(),
        )
    }

    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adafactor
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }
}

/// Plain stochastic gradient descent; keeps no state.
pub struct Sgd {
    cfg: OptimizerConfig,
    t: u64,
}

impl Sgd {
    pub fn new(cfg: OptimizerConfig) -> Self {
        Sgd { cfg, t: 0 }
    }
}

impl Optimizer for Sgd {
    fn step(&mut self, x: &mut Matrix, grad: &mut Matrix) -> Result<(), OptimError> {
        if x.dims() != grad.dims() {
            return Err(OptimError::Matrix(MatrixError::DimMismatch {
                op: "sgd_step",
                lhs: x.dims(),
                rhs: grad.dims(),
            }));
        }
        let eta = step_size(
            self.cfg.schedule,
            self.cfg.eta0,
            self.cfg.beta1,
            self.t,
            self.cfg.horizon,
        )?;
        for (xv, gv) in x.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *xv -= eta * gv;
        }
        self.t += 1;
        Ok(())
    }

    fn accumulate_decay(&self) -> f64 {
        0.0
    }

    fn state_scalars(&self) -> u64 {
        0
    }

    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Sgd
    }

    fn steps_taken(&self) -> u64 {
        self.t
    }
}
