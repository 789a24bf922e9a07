//! Computable convergence diagnostics: the stationarity bound for the
//! rank-one alternating optimizer under the standard assumptions (lower
//! bounded objective, unbiased and infinity-norm-bounded stochastic
//! gradients, L-smoothness), plus the two prescribed step-size corollaries
//! and an empirical bound check that runs the optimizer and compares the
//! measured mean squared gradient norm against the bound.

use alloc::vec::Vec;
use core::fmt;

use crate::fmath;
use crate::matrix::Matrix;
use crate::optim::{OptimizerConfig, OptimizerKind, Schedule};
use crate::problems::Problem;
use crate::train::{run_experiment, RunConfig, RunObserver, TrainError};

#[derive(Debug, Clone, PartialEq)]
pub enum TheoryError {
    BadParameter { field: &'static str, value: f64 },
    /// The problem does not expose constants satisfying the assumptions.
    AssumptionsUnavailable { problem: &'static str },
    /// The bound is stated for the theorem step-size schedule only.
    WrongSchedule,
    Train(TrainError),
}

impl fmt::Display for TheoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryError::BadParameter { field, value } => {
                write!(f, "invalid diagnostic parameter {field}: {value}")
            }
            TheoryError::AssumptionsUnavailable { problem } => write!(
                f,
                "problem '{problem}' does not provide smoothness/gradient-bound constants"
            ),
            TheoryError::WrongSchedule => {
                write!(f, "bound check requires the theorem step-size schedule")
            }
            TheoryError::Train(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TheoryError {}

impl From<TrainError> for TheoryError {
    fn from(e: TrainError) -> Self {
        TheoryError::Train(e)
    }
}

/// Problem constants the bound is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    /// Gradient Lipschitz constant L.
    pub smoothness: f64,
    /// Infinity-norm bound G on stochastic gradients.
    pub grad_inf_bound: f64,
    /// Lower bound on the objective.
    pub f_star: f64,
    /// Initial optimality gap `f(X_0) - f_star`.
    pub delta_f: f64,
}

/// `Gamma = sqrt((2 sqrt(mn) G^2 + eps) / (1 - beta2))`.
pub fn gamma(m: usize, n: usize, grad_inf_bound: f64, eps: f64, beta2: f64) -> Result<f64, TheoryError> {
    if !(0.0..1.0).contains(&beta2) {
        return Err(TheoryError::BadParameter {
            field: "beta2",
            value: beta2,
        });
    }
    let mn = (m * n) as f64;
    let g2 = grad_inf_bound * grad_inf_bound;
    Ok(fmath::sqrt((2.0 * fmath::sqrt(mn) * g2 + eps) / (1.0 - beta2)))
}

/// `Phi = mn G^2 (8 / (T (1 - beta1)) + eta^2 2 L^2 / ((1 - beta1)^2 eps) + (1 - beta1))`.
#[allow(clippy::too_many_arguments)]
pub fn phi(
    m: usize,
    n: usize,
    grad_inf_bound: f64,
    beta1: f64,
    eta: f64,
    smoothness: f64,
    eps: f64,
    total_steps: u64,
) -> f64 {
    let mn = (m * n) as f64;
    let g2 = grad_inf_bound * grad_inf_bound;
    let one_minus = 1.0 - beta1;
    mn * g2
        * (8.0 / (total_steps as f64 * one_minus)
            + eta * eta / (one_minus * one_minus) * 2.0 * smoothness * smoothness / eps
            + one_minus)
}

/// Right-hand side of the stationarity bound:
/// `2 Gamma Delta_f / (eta T) + L mn G^2 Gamma eta / eps + Gamma^2 Phi / eps`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_bound(
    m: usize,
    n: usize,
    params: &TheoryParams,
    eta: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    total_steps: u64,
) -> Result<f64, TheoryError> {
    if total_steps == 0 {
        return Err(TheoryError::BadParameter {
            field: "total_steps",
            value: 0.0,
        });
    }
    if !(eta > 0.0) {
        return Err(TheoryError::BadParameter {
            field: "eta",
            value: eta,
        });
    }
    let g = gamma(m, n, params.grad_inf_bound, eps, beta2)?;
    let p = phi(
        m,
        n,
        params.grad_inf_bound,
        beta1,
        eta,
        params.smoothness,
        eps,
        total_steps,
    );
    let mn = (m * n) as f64;
    let g2 = params.grad_inf_bound * params.grad_inf_bound;
    Ok(2.0 * g * params.delta_f / (eta * total_steps as f64)
        + params.smoothness * mn * g2 * g * eta / eps
        + g * g * p / eps)
}

/// The horizon-independent prescription: any `eps >= 2 sqrt(mn) G^2` with
/// `eta = (1 - beta1)^{1.5} sqrt(eps / 2) / L` gives an O(1/T) bound up to a
/// floor term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedEpsPrescription {
    pub eps_min: f64,
    pub eta: f64,
    pub bound: f64,
}

pub fn corollary_fixed_eps(
    m: usize,
    n: usize,
    params: &TheoryParams,
    beta1: f64,
    beta2: f64,
    total_steps: u64,
) -> Result<FixedEpsPrescription, TheoryError> {
    if !(0.0..1.0).contains(&beta2) {
        return Err(TheoryError::BadParameter {
            field: "beta2",
            value: beta2,
        });
    }
    let mn = (m * n) as f64;
    let g2 = params.grad_inf_bound * params.grad_inf_bound;
    let eps_min = 2.0 * fmath::sqrt(mn) * g2;
    let one_minus = 1.0 - beta1;
    let eta = fmath::powf(one_minus, 1.5) / params.smoothness * fmath::sqrt(eps_min / 2.0);
    let t = total_steps as f64;
    let bound = 5.0 * mn * g2 * one_minus / (1.0 - beta2)
        + (4.0 * params.smoothness * params.delta_f
            / (fmath::powf(one_minus, 1.5) * fmath::sqrt(1.0 - beta2))
            + 16.0 * mn * g2 / (one_minus * (1.0 - beta2)))
            / t;
    Ok(FixedEpsPrescription {
        eps_min,
        eta,
        bound,
    })
}

/// The horizon-dependent prescription `beta1 = 1 - T^{-1/2.5}` closing the
/// floor term at a slower rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonPrescription {
    pub beta1: f64,
    pub bound: f64,
}

pub fn corollary_horizon(
    m: usize,
    n: usize,
    params: &TheoryParams,
    beta2: f64,
    total_steps: u64,
) -> Result<HorizonPrescription, TheoryError> {
    if !(0.0..1.0).contains(&beta2) {
        return Err(TheoryError::BadParameter {
            field: "beta2",
            value: beta2,
        });
    }
    let t = total_steps as f64;
    let rate = fmath::powf(t, -1.0 / 2.5);
    let mn = (m * n) as f64;
    let g2 = params.grad_inf_bound * params.grad_inf_bound;
    let bound = (4.0 * params.smoothness * params.delta_f / fmath::sqrt(1.0 - beta2)
        + 21.0 * mn * g2 / (1.0 - beta2))
        * rate;
    Ok(HorizonPrescription {
        beta1: 1.0 - rate,
        bound,
    })
}

/// Outcome of an empirical bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `(1/T) sum_t ||grad f(X_t)||^2`, averaged over seeds, measured with
    /// the deterministic gradient.
    pub empirical_mean_grad_sq: f64,
    pub per_seed_mean_grad_sq: Vec<f64>,
    pub bound_rhs: f64,
    pub gamma: f64,
    pub phi: f64,
    pub holds: bool,
    /// Assumed and observed stochastic-gradient infinity norms; the bound is
    /// only meaningful when `observed <= assumed`.
    pub grad_inf_assumed: f64,
    pub grad_inf_observed: f64,
    pub assumption_ok: bool,
    pub delta_f: f64,
}

struct GradNormProbe<'a> {
    problem: &'a dyn Problem,
    sum_sq: f64,
    steps: u64,
}

impl RunObserver for GradNormProbe<'_> {
    fn step_begin(&mut self, _step: u64, params: &[Matrix]) {
        self.sum_sq += self
            .problem
            .full_grad_sq_norm(params)
            .expect("params come from the same problem");
        self.steps += 1;
    }
}

/// Run the rank-one optimizer under the theorem schedule on a problem with
/// known constants and compare the measured stationarity average with the
/// bound. Problems without constants are refused.
pub fn bound_check(
    problem: &dyn Problem,
    opt: &OptimizerConfig,
    steps: u64,
    seeds: &[u64],
) -> Result<BoundReport, TheoryError> {
    let constants = problem
        .theory_constants()
        .ok_or(TheoryError::AssumptionsUnavailable {
            problem: problem.name(),
        })?;
    if opt.schedule != Schedule::Theorem {
        return Err(TheoryError::WrongSchedule);
    }
    if seeds.is_empty() {
        return Err(TheoryError::BadParameter {
            field: "seeds",
            value: 0.0,
        });
    }
    let init = problem.initial_params();
    let f0 = problem.full_loss(&init).map_err(TrainError::Problem)?;
    let delta_f = f0 - constants.f_star;

    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut observed_inf = 0.0f64;
    for &seed in seeds {
        let mut probe = GradNormProbe {
            problem,
            sum_sq: 0.0,
            steps: 0,
        };
        let cfg = RunConfig::new(OptimizerKind::Alada, *opt, steps, seed);
        let outcome = run_experiment(problem, &cfg, &mut probe)?;
        if outcome.max_grad_inf_norm > observed_inf {
            observed_inf = outcome.max_grad_inf_norm;
        }
        per_seed.push(probe.sum_sq / probe.steps as f64);
    }
    let assumption_ok = observed_inf <= constants.grad_inf_bound;

    let (m, n) = init[0].dims();
    let params = TheoryParams {
        smoothness: constants.smoothness,
        grad_inf_bound: constants.grad_inf_bound,
        f_star: constants.f_star,
        delta_f,
    };
    let bound_rhs = convergence_bound(
        m,
        n,
        &params,
        opt.eta0,
        opt.beta1,
        opt.beta2,
        opt.eps,
        steps,
    )?;
    let g = gamma(m, n, constants.grad_inf_bound, opt.eps, opt.beta2)?;
    let p = phi(
        m,
        n,
        constants.grad_inf_bound,
        opt.beta1,
        opt.eta0,
        constants.smoothness,
        opt.eps,
        steps,
    );
    let empirical = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
    Ok(BoundReport {
        empirical_mean_grad_sq: empirical,
        per_seed_mean_grad_sq: per_seed,
        bound_rhs,
        gamma: g,
        phi: p,
        holds: empirical <= bound_rhs,
        grad_inf_assumed: constants.grad_inf_bound,
        grad_inf_observed: observed_inf,
        assumption_ok,
        delta_f,
    })
}
