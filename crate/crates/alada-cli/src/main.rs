//! Benchmark harness CLI for the memory-efficient optimizer library.
//!
//! Exit codes: 0 success, 2 configuration error, 3 non-finite-loss abort.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use alada_cli::harness::{run_with_summary, schedule_name, sweep_betas, sweep_to_csv};
use alada_cli::{snapshot, trace_io};
use alada_core::{
    bound_check, map_adam_betas, Mlp, OptimizerConfig, OptimizerKind, Problem, Quadratic,
    RunConfig, Schedule, SoftmaxRegression, TheoryError, TrainError,
};

#[derive(Parser)]
#[command(
    name = "alada",
    about = "Benchmark harness for memory-efficient adaptive optimizers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded training experiment and record its trace.
    Run(RunArgs),
    /// Grid sweep over decay parameters with per-cell step-size tuning.
    Sweep(SweepArgs),
    /// Compare the measured stationarity average against the computable
    /// convergence bound on a bounded-noise quadratic.
    BoundCheck(BoundCheckArgs),
    /// Audit transient allocations made inside optimizer steps.
    MemAudit(MemAuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerChoice {
    Alada,
    Adam,
    Adafactor,
    Sgd,
}

impl From<OptimizerChoice> for OptimizerKind {
    fn from(c: OptimizerChoice) -> Self {
        match c {
            OptimizerChoice::Alada => OptimizerKind::Alada,
            OptimizerChoice::Adam => OptimizerKind::Adam,
            OptimizerChoice::Adafactor => OptimizerKind::Adafactor,
            OptimizerChoice::Sgd => OptimizerKind::Sgd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemChoice {
    Quadratic,
    Softmax,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ScheduleChoice {
    Constant,
    LinearDecay,
    Theorem,
    PaperLiteral,
}

impl From<ScheduleChoice> for Schedule {
    fn from(c: ScheduleChoice) -> Self {
        match c {
            ScheduleChoice::Constant => Schedule::Constant,
            ScheduleChoice::LinearDecay => Schedule::LinearDecay,
            ScheduleChoice::Theorem => Schedule::Theorem,
            ScheduleChoice::PaperLiteral => Schedule::PaperLiteral,
        }
    }
}

#[derive(Args)]
struct ProblemArgs {
    /// Objective to optimize.
    #[arg(long, value_enum, default_value = "quadratic")]
    problem: ProblemChoice,
    /// Rows of the parameter matrix (classes for softmax, outputs for mlp).
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// Columns of the parameter matrix (features for softmax, inputs for mlp).
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Entry-wise uniform gradient-noise bound (quadratic only).
    #[arg(long, default_value_t = 0.0)]
    noise_bound: f64,
    /// Synthetic dataset size (softmax and mlp).
    #[arg(long, default_value_t = 1000)]
    dataset_size: usize,
    /// Fraction of labels resampled uniformly at random (softmax).
    #[arg(long, default_value_t = 0.3)]
    label_noise: f64,
    /// Hidden width of the two-layer mlp.
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    /// Minibatch size (mlp).
    #[arg(long, default_value_t = 4)]
    batch: usize,
}

impl ProblemArgs {
    fn build(&self, seed: u64) -> Result<Box<dyn Problem>, CliError> {
        Ok(match self.problem {
            ProblemChoice::Quadratic => Box::new(
                Quadratic::toward_ones(self.m, self.n, self.noise_bound)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            ),
            ProblemChoice::Softmax => Box::new(
                SoftmaxRegression::with_label_noise(
                    self.m,
                    self.n,
                    self.dataset_size,
                    seed,
                    self.label_noise,
                )
                .map_err(|e| CliError::Config(e.to_string()))?,
            ),
            ProblemChoice::Mlp => Box::new(
                Mlp::synthetic(
                    &[self.n, self.hidden, self.m],
                    self.dataset_size,
                    self.batch,
                    seed,
                )
                .map_err(|e| CliError::Config(e.to_string()))?,
            ),
        })
    }
}

#[derive(Args)]
struct OptArgs {
    #[arg(long, value_enum, default_value = "alada")]
    optimizer: OptimizerChoice,
    /// First-moment decay; defaults to the optimizer's standard value.
    #[arg(long)]
    beta1: Option<f64>,
    /// Second-moment decay; defaults to the optimizer's standard value.
    #[arg(long)]
    beta2: Option<f64>,
    /// Regularizer; defaults to the optimizer's standard value.
    #[arg(long)]
    eps: Option<f64>,
    /// Initial step size.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, value_enum, default_value = "linear_decay")]
    schedule: ScheduleChoice,
    /// Treat --beta1/--beta2 as Adam settings (defaults 0.9/0.999) and map
    /// them onto this optimizer's decay parameters before running.
    #[arg(long)]
    map_adam_betas: bool,
}

impl OptArgs {
    fn build(&self, steps: u64) -> Result<(OptimizerKind, OptimizerConfig), CliError> {
        let kind: OptimizerKind = self.optimizer.into();
        let mut cfg = kind.default_config();
        if self.map_adam_betas {
            let b1 = self.beta1.unwrap_or(0.9);
            let b2 = self.beta2.unwrap_or(0.999);
            let (m1, m2) = map_adam_betas(b1, b2).map_err(|e| CliError::Config(e.to_string()))?;
            cfg.beta1 = m1;
            cfg.beta2 = m2;
        } else {
            if let Some(b1) = self.beta1 {
                cfg.beta1 = b1;
            }
            if let Some(b2) = self.beta2 {
                cfg.beta2 = b2;
            }
        }
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        cfg.eta0 = self.lr;
        cfg.schedule = self.schedule.into();
        cfg.horizon = steps;
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok((kind, cfg))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    opt: OptArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1000)]
    steps: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the per-step trace CSV here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the JSON summary here (it is always printed to stdout).
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Export the problem's dataset snapshot here.
    #[arg(long)]
    dataset_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    opt: OptArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1000)]
    steps: u64,
    /// Comma-separated first-moment decay grid.
    #[arg(long, value_delimiter = ',', default_value = "0,0.9")]
    beta1_grid: Vec<f64>,
    /// Comma-separated second-moment decay grid.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,0.99,0.999")]
    beta2_grid: Vec<f64>,
    /// Comma-separated step-size grid tuned per cell.
    #[arg(long, value_delimiter = ',', default_value = "0.003,0.01,0.03,0.1")]
    lr_grid: Vec<f64>,
    /// Comma-separated seeds averaged per configuration.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    /// Write the grid CSV here (also printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the full per-cell JSON here.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundCheckArgs {
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    steps: u64,
    #[arg(long, default_value_t = 0.5)]
    noise_bound: f64,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.9)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-16)]
    eps: f64,
    /// First seed; seeds run base..base+count.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    seed_count: u64,
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct MemAuditArgs {
    #[command(flatten)]
    opt: OptArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 50)]
    steps: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    NonFinite { step: u64 },
    Io(String),
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFiniteLoss { step } => CliError::NonFinite { step },
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::BoundCheck(args) => cmd_bound_check(args),
        Command::MemAudit(args) => cmd_mem_audit(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::NonFinite { step }) => {
            eprintln!("error: non-finite loss at step {step}; run aborted");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, CliError> {
    let (kind, cfg) = args.opt.build(args.steps)?;
    let problem = args.problem.build(args.seed)?;
    let run_cfg = RunConfig::new(kind, cfg, args.steps, args.seed);
    let (outcome, summary) = run_with_summary(problem.as_ref(), &run_cfg)?;

    if let Some(path) = &args.trace_out {
        fs::write(path, trace_io::trace_to_string(&outcome.trace))?;
    }
    if let Some(path) = &args.dataset_out {
        snapshot::save_snapshot(path, &problem.snapshot())
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if let Some(path) = &args.summary_out {
        fs::write(path, &json)?;
    }
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, CliError> {
    let (kind, cfg) = args.opt.build(args.steps)?;
    if args.beta1_grid.is_empty() || args.beta2_grid.is_empty() || args.lr_grid.is_empty() {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    if args.seeds.is_empty() {
        return Err(CliError::Config("need at least one seed".into()));
    }
    let problem_args = &args.problem;
    let make_problem = |seed: u64| -> Box<dyn Problem> {
        problem_args
            .build(seed)
            .expect("problem construction validated before the sweep")
    };
    // Validate once up front so construction errors exit with code 2.
    problem_args.build(args.seeds[0])?;
    let cells = sweep_betas(
        &make_problem,
        kind,
        cfg,
        args.steps,
        &args.beta1_grid,
        &args.beta2_grid,
        &args.lr_grid,
        &args.seeds,
    )?;
    let csv = sweep_to_csv(&cells);
    if let Some(path) = &args.out {
        fs::write(path, &csv)?;
    }
    if let Some(path) = &args.summary_out {
        fs::write(path, serde_json::to_string_pretty(&cells).expect("cells serialize"))?;
    }
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound_check(args: BoundCheckArgs) -> Result<ExitCode, CliError> {
    let problem = Quadratic::toward_ones(args.m, args.n, args.noise_bound)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = OptimizerConfig::alada()
        .with_betas(args.beta1, args.beta2)
        .with_eps(args.eps)
        .with_eta(args.lr)
        .with_schedule(Schedule::Theorem, args.steps);
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if args.seed_count == 0 {
        return Err(CliError::Config("seed_count must be positive".into()));
    }
    let seeds: Vec<u64> = (args.seed..args.seed + args.seed_count).collect();
    let report = bound_check(&problem, &cfg, args.steps, &seeds).map_err(|e| match e {
        TheoryError::Train(t) => CliError::from(t),
        other => CliError::Config(other.to_string()),
    })?;

    #[derive(serde::Serialize)]
    struct BoundSummary {
        m: usize,
        n: usize,
        steps: u64,
        seeds: Vec<u64>,
        schedule: &'static str,
        empirical_mean_grad_sq: f64,
        per_seed_mean_grad_sq: Vec<f64>,
        bound_rhs: f64,
        gamma: f64,
        phi: f64,
        holds: bool,
        grad_inf_assumed: f64,
        grad_inf_observed: f64,
        assumption_ok: bool,
        delta_f: f64,
    }
    let summary = BoundSummary {
        m: args.m,
        n: args.n,
        steps: args.steps,
        seeds,
        schedule: schedule_name(Schedule::Theorem),
        empirical_mean_grad_sq: report.empirical_mean_grad_sq,
        per_seed_mean_grad_sq: report.per_seed_mean_grad_sq.clone(),
        bound_rhs: report.bound_rhs,
        gamma: report.gamma,
        phi: report.phi,
        holds: report.holds,
        grad_inf_assumed: report.grad_inf_assumed,
        grad_inf_observed: report.grad_inf_observed,
        assumption_ok: report.assumption_ok,
        delta_f: report.delta_f,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if let Some(path) = &args.summary_out {
        fs::write(path, &json)?;
    }
    println!("{json}");
    if report.holds && report.assumption_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_mem_audit(args: MemAuditArgs) -> Result<ExitCode, CliError> {
    let (kind, cfg) = args.opt.build(args.steps)?;
    let problem = args.problem.build(args.seed)?;
    let run_cfg = RunConfig::new(kind, cfg, args.steps, args.seed);
    let (_, summary) = run_with_summary(problem.as_ref(), &run_cfg)?;

    #[derive(serde::Serialize)]
    struct AuditSummary {
        optimizer: &'static str,
        problem: &'static str,
        param_dims: Vec<[usize; 2]>,
        steps: u64,
        alloc_threshold_bytes: usize,
        peak_step_alloc_bytes: usize,
        step_allocs_at_threshold: u64,
        ok: bool,
    }
    let ok = summary.step_allocs_at_threshold == 0;
    let audit = AuditSummary {
        optimizer: summary.optimizer,
        problem: summary.problem,
        param_dims: summary.param_dims.clone(),
        steps: summary.steps,
        alloc_threshold_bytes: summary.alloc_threshold_bytes,
        peak_step_alloc_bytes: summary.peak_step_alloc_bytes,
        step_allocs_at_threshold: summary.step_allocs_at_threshold,
        ok,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&audit).expect("audit serializes")
    );
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
