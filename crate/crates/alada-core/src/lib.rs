//! Memory-efficient adaptive optimization over matrix-shaped parameters.
//!
//! The centerpiece is Alada, an adaptive optimizer that keeps its second
//! moment as a rank-one factorization `p q^T` updated by alternating
//! least-squares steps, and keeps its first moment in the gradient buffer
//! itself. Persistent state is `m + n + 2` scalars per `m x n` parameter,
//! against Adam's `2mn + 1`, while both moments stay estimated.
//!
//! The crate also carries stock Adam, Adafactor, and SGD under the same step
//! interface, step-size schedules, tensor-to-matrix reshape planning, a set
//! of synthetic test problems with fused gradient accumulation, a seeded
//! training loop, and computable convergence diagnostics.
//!
//! `no_std` compatible (with `alloc`): disable default features and enable
//! `libm`. IO, file formats, and the benchmark CLI live in the companion
//! `alada-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

mod fmath;

pub mod matrix;
pub mod moment;
pub mod optim;
pub mod problems;
pub mod reshape;
pub mod theory;
pub mod train;

pub use matrix::{outer, vec_sq_norm, Matrix, MatrixError};
pub use moment::{FirstMoment, MomentError, SecondMomentFactors};
pub use optim::{
    make_optimizer, map_adam_betas, state_scalar_count, step_size, EpsPlacement, OptimError,
    Optimizer, OptimizerConfig, OptimizerKind, Schedule,
};
pub use problems::{
    DatasetSnapshot, Mlp, Problem, ProblemError, Quadratic, Sampler, SoftmaxRegression, StepEval,
    TheoryConstants,
};
pub use reshape::{plan_reshape, ReshapeError, ReshapePlan, Shape, Tensor};
pub use theory::{
    bound_check, convergence_bound, corollary_fixed_eps, corollary_horizon, gamma, phi,
    BoundReport, TheoryError, TheoryParams,
};
pub use train::{
    run_experiment, NoopObserver, RunConfig, RunObserver, RunOutcome, TraceRecord, TrainError,
};
