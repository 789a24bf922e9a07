//! Run orchestration shared by the CLI and the test suites: an observer that
//! times steps and audits optimizer-window allocations, JSON-ready summary
//! records, and the step-size-tuned grid sweep.

use std::time::Instant;

use serde::Serialize;

use alada_core::{
    run_experiment, Matrix, OptimizerConfig, OptimizerKind, Problem, RunConfig, RunObserver,
    RunOutcome, Schedule, TrainError,
};

use crate::audit::{self, AuditStats};

/// Observer used for real runs: wall-clock per step plus allocation stats
/// over the optimizer windows only.
pub struct HarnessObserver {
    threshold_bytes: usize,
    pub audit: AuditStats,
    step_started: Option<Instant>,
    pub total_step_secs: f64,
}

impl HarnessObserver {
    /// `threshold_bytes` is the size from which a transient allocation in an
    /// optimizer step counts as dense (normally `8 * m * n`).
    pub fn new(threshold_bytes: usize) -> Self {
        HarnessObserver {
            threshold_bytes,
            audit: AuditStats::default(),
            step_started: None,
            total_step_secs: 0.0,
        }
    }
}

impl RunObserver for HarnessObserver {
    fn step_begin(&mut self, _step: u64, _params: &[Matrix]) {
        self.step_started = Some(Instant::now());
    }

    fn opt_begin(&mut self) {
        audit::arm(self.threshold_bytes);
    }

    fn opt_end(&mut self) {
        self.audit.merge(audit::disarm());
    }

    fn step_end(&mut self, _step: u64, _params: &[Matrix]) {
        if let Some(t0) = self.step_started.take() {
            self.total_step_secs += t0.elapsed().as_secs_f64();
        }
    }
}

pub fn schedule_name(schedule: Schedule) -> &'static str {
    match schedule {
        Schedule::Constant => "constant",
        Schedule::LinearDecay => "linear_decay",
        Schedule::Theorem => "theorem",
        Schedule::PaperLiteral => "paper_literal",
    }
}

/// JSON summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub optimizer: &'static str,
    pub problem: &'static str,
    pub param_dims: Vec<[usize; 2]>,
    pub steps: u64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr: f64,
    pub schedule: &'static str,
    pub final_loss: f64,
    pub final_cum_avg_loss: f64,
    pub min_grad_fro_norm: f64,
    pub max_grad_inf_norm: f64,
    pub state_scalars: u64,
    pub alloc_threshold_bytes: usize,
    pub peak_step_alloc_bytes: usize,
    pub step_allocs_at_threshold: u64,
    pub secs_per_step: f64,
}

/// Largest parameter footprint, used as the dense-allocation threshold.
pub fn dense_threshold_bytes(problem: &dyn Problem) -> usize {
    let mut max_elems = 0usize;
    for k in 0..problem.param_count() {
        let (r, c) = problem.param_dims(k);
        max_elems = max_elems.max(r * c);
    }
    8 * max_elems
}

/// Run one experiment with timing and allocation audit, returning the raw
/// outcome alongside the summary row.
pub fn run_with_summary(
    problem: &dyn Problem,
    cfg: &RunConfig,
) -> Result<(RunOutcome, RunSummary), TrainError> {
    let threshold = dense_threshold_bytes(problem);
    let mut observer = HarnessObserver::new(threshold);
    let outcome = run_experiment(problem, cfg, &mut observer)?;
    let param_dims = (0..problem.param_count())
        .map(|k| {
            let (r, c) = problem.param_dims(k);
            [r, c]
        })
        .collect();
    let summary = RunSummary {
        optimizer: cfg.optimizer.name(),
        problem: problem.name(),
        param_dims,
        steps: cfg.steps,
        seed: cfg.seed,
        beta1: cfg.opt.beta1,
        beta2: cfg.opt.beta2,
        eps: cfg.opt.eps,
        lr: cfg.opt.eta0,
        schedule: schedule_name(cfg.opt.schedule),
        final_loss: outcome.final_loss,
        final_cum_avg_loss: outcome.final_cum_avg_loss,
        min_grad_fro_norm: outcome.min_grad_fro_norm,
        max_grad_inf_norm: outcome.max_grad_inf_norm,
        state_scalars: outcome.state_scalars,
        alloc_threshold_bytes: threshold,
        peak_step_alloc_bytes: observer.audit.peak_single_bytes,
        step_allocs_at_threshold: observer.audit.large_count,
        secs_per_step: observer.total_step_secs / cfg.steps as f64,
    };
    Ok((outcome, summary))
}

/// Step-size tuning result for one optimizer setting.
#[derive(Debug, Clone, Serialize)]
pub struct LrTuning {
    pub lr: f64,
    pub mean_final_cum_avg_loss: f64,
    pub per_seed: Vec<f64>,
}

/// One cell of the decay-parameter grid: best step size over the grid by
/// mean final cumulative-average loss.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub beta1: f64,
    pub beta2: f64,
    pub best_lr: f64,
    pub mean_final_cum_avg_loss: f64,
    pub lr_results: Vec<LrTuning>,
}

/// Tune the step size over `lr_grid` for a fixed optimizer setting; the
/// problem is rebuilt per seed so every seed sees a fresh dataset.
pub fn tune_lr(
    make_problem: &dyn Fn(u64) -> Box<dyn Problem>,
    optimizer: OptimizerKind,
    base: OptimizerConfig,
    steps: u64,
    lr_grid: &[f64],
    seeds: &[u64],
) -> Result<Vec<LrTuning>, TrainError> {
    let mut results = Vec::with_capacity(lr_grid.len());
    for &lr in lr_grid {
        let mut per_seed = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let problem = make_problem(seed);
            let cfg = RunConfig::new(optimizer, base.with_eta(lr), steps, seed);
            let outcome = run_experiment(problem.as_ref(), &cfg, &mut crate::NoopObserver)?;
            per_seed.push(outcome.final_cum_avg_loss);
        }
        let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        results.push(LrTuning {
            lr,
            mean_final_cum_avg_loss: mean,
            per_seed,
        });
    }
    Ok(results)
}

pub fn best_tuning(results: &[LrTuning]) -> &LrTuning {
    results
        .iter()
        .min_by(|a, b| {
            a.mean_final_cum_avg_loss
                .total_cmp(&b.mean_final_cum_avg_loss)
        })
        .expect("lr grid is nonempty")
}

/// Full decay-parameter sweep with per-cell step-size tuning.
#[allow(clippy::too_many_arguments)]
pub fn sweep_betas(
    make_problem: &dyn Fn(u64) -> Box<dyn Problem>,
    optimizer: OptimizerKind,
    base: OptimizerConfig,
    steps: u64,
    beta1_grid: &[f64],
    beta2_grid: &[f64],
    lr_grid: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepCell>, TrainError> {
    let mut cells = Vec::with_capacity(beta1_grid.len() * beta2_grid.len());
    for &beta1 in beta1_grid {
        for &beta2 in beta2_grid {
            let cfg = base.with_betas(beta1, beta2);
            let lr_results = tune_lr(make_problem, optimizer, cfg, steps, lr_grid, seeds)?;
            let best = best_tuning(&lr_results);
            cells.push(SweepCell {
                beta1,
                beta2,
                best_lr: best.lr,
                mean_final_cum_avg_loss: best.mean_final_cum_avg_loss,
                lr_results: lr_results.clone(),
            });
        }
    }
    Ok(cells)
}

/// Grid CSV, one line per cell.
pub fn sweep_to_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("beta1,beta2,best_lr,mean_final_cum_avg_loss\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.beta1, c.beta2, c.best_lr, c.mean_final_cum_avg_loss
        ));
    }
    out
}
