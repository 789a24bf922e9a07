//! Seeded single-run training loop producing a per-step trace.
//!
//! Each step draws a sample, folds its gradient into the per-parameter
//! buffers (fused, with the decay the optimizer asks for), runs one optimizer
//! step per parameter, and records a trace row. Identical configs and seeds
//! replay bit-identical trajectories.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::fmath;
use crate::matrix::Matrix;
use crate::optim::{
    make_optimizer, state_scalar_count, step_size, OptimError, Optimizer, OptimizerConfig,
    OptimizerKind,
};
use crate::problems::{Problem, ProblemError, Sampler};

/// One observation row per training step. `cum_avg_loss` is the running mean
/// of `loss` over steps `0..=step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub loss: f64,
    pub cum_avg_loss: f64,
    pub grad_fro_norm: f64,
    pub step_size: f64,
    pub state_scalars: u64,
}

/// Hooks around the phases of each training step. The optimizer window
/// (`opt_begin`/`opt_end`) brackets exactly the optimizer state updates and
/// descent arithmetic, nothing else.
pub trait RunObserver {
    fn step_begin(&mut self, _step: u64, _params: &[Matrix]) {}
    fn opt_begin(&mut self) {}
    fn opt_end(&mut self) {}
    fn step_end(&mut self, _step: u64, _params: &[Matrix]) {}
}

/// Observer that does nothing.
pub struct NoopObserver;

impl RunObserver for NoopObserver {}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// Loss became NaN or infinite at this step; the run is aborted.
    NonFiniteLoss { step: u64 },
    /// Config rejected before the run started; carries the field name.
    InvalidConfig { field: &'static str },
    Optim(OptimError),
    Problem(ProblemError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::NonFiniteLoss { step } => {
                write!(f, "non-finite loss at step {step}")
            }
            TrainError::InvalidConfig { field } => write!(f, "invalid run config: {field}"),
            TrainError::Optim(e) => write!(f, "{e}"),
            TrainError::Problem(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

impl From<OptimError> for TrainError {
    fn from(e: OptimError) -> Self {
        TrainError::Optim(e)
    }
}

impl From<ProblemError> for TrainError {
    fn from(e: ProblemError) -> Self {
        TrainError::Problem(e)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub optimizer: OptimizerKind,
    pub opt: OptimizerConfig,
    pub steps: u64,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(optimizer: OptimizerKind, opt: OptimizerConfig, steps: u64, seed: u64) -> Self {
        RunConfig {
            optimizer,
            opt,
            steps,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.steps == 0 {
            return Err(TrainError::InvalidConfig { field: "steps" });
        }
        if self.opt.horizon < self.steps {
            return Err(TrainError::InvalidConfig {
                field: "horizon < steps",
            });
        }
        self.opt.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<TraceRecord>,
    pub final_params: Vec<Matrix>,
    /// Loss recorded at the last step.
    pub final_loss: f64,
    /// Running mean of losses after the last step.
    pub final_cum_avg_loss: f64,
    /// Smallest raw-gradient Frobenius norm seen in the trace.
    pub min_grad_fro_norm: f64,
    /// Largest absolute raw-gradient entry seen across the whole run.
    pub max_grad_inf_norm: f64,
    /// Persistent optimizer scalars, summed over parameters.
    pub state_scalars: u64,
}

/// Run `cfg.steps` optimizer steps of `cfg.optimizer` on `problem`.
pub fn run_experiment(
    problem: &dyn Problem,
    cfg: &RunConfig,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome, TrainError> {
    cfg.validate()?;
    let mut sampler = Sampler::new(cfg.seed);
    let mut params = problem.initial_params();
    let mut grad_bufs: Vec<Matrix> = params
        .iter()
        .map(|p| Matrix::zeros(p.rows(), p.cols()).expect("params have valid dims"))
        .collect();
    let mut opts: Vec<Box<dyn Optimizer>> = Vec::with_capacity(params.len());
    for p in &params {
        opts.push(make_optimizer(
            cfg.optimizer,
            cfg.opt,
            p.rows(),
            p.cols(),
        )?);
    }
    let state_scalars: u64 = params
        .iter()
        .map(|p| state_scalar_count(cfg.optimizer, p.rows(), p.cols()))
        .sum();

    let mut trace = Vec::with_capacity(cfg.steps as usize);
    let mut loss_sum = 0.0;
    let mut min_grad = f64::INFINITY;
    let mut max_inf = 0.0f64;
    for t in 0..cfg.steps {
        observer.step_begin(t, &params);
        let decay = opts[0].accumulate_decay();
        let eval = problem.accumulate_grad(&params, &mut sampler, &mut grad_bufs, decay)?;
        if !eval.loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { step: t });
        }
        let eta = step_size(
            cfg.opt.schedule,
            cfg.opt.eta0,
            cfg.opt.beta1,
            t,
            cfg.opt.horizon,
        )?;
        observer.opt_begin();
        for (k, opt) in opts.iter_mut().enumerate() {
            opt.step(&mut params[k], &mut grad_bufs[k])?;
        }
        observer.opt_end();

        loss_sum += eval.loss;
        let grad_norm = fmath::sqrt(eval.grad_sq_norm);
        if grad_norm < min_grad {
            min_grad = grad_norm;
        }
        if eval.grad_inf_norm > max_inf {
            max_inf = eval.grad_inf_norm;
        }
        trace.push(TraceRecord {
            step: t,
            loss: eval.loss,
            cum_avg_loss: loss_sum / (t + 1) as f64,
            grad_fro_norm: grad_norm,
            step_size: eta,
            state_scalars,
        });
        observer.step_end(t, &params);
    }

    let last = trace.last().expect("steps >= 1");
    Ok(RunOutcome {
        final_loss: last.loss,
        final_cum_avg_loss: last.cum_avg_loss,
        min_grad_fro_norm: min_grad,
        max_grad_inf_norm: max_inf,
        state_scalars,
        final_params: params,
        trace,
    })
}
