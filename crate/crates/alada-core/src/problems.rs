//! Test objectives with stochastic gradient oracles and a fused
//! gradient-accumulation entry point.
//!
//! The fused contract is the load-bearing piece: `accumulate_grad` folds the
//! freshly drawn sample's gradient into the caller's buffer as
//! `buf <- decay * buf + (1 - decay) * grad` without ever materializing the
//! gradient itself. With `decay = beta1` the buffer therefore holds the
//! first-moment moving average, which is what lets the rank-one optimizer run
//! with no dense state of its own.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::{RngCore, SeedableRng};

use crate::fmath;
use crate::matrix::{vec_dot, vec_sq_norm, Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    BadParameter {
        field: &'static str,
        message: &'static str,
    },
    /// Parameter list handed to the oracle has the wrong arity or shapes.
    ParamMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    WrongParamCount {
        expected: usize,
        got: usize,
    },
    Matrix(MatrixError),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::BadParameter { field, message } => {
                write!(f, "problem parameter {field}: {message}")
            }
            ProblemError::ParamMismatch {
                index,
                expected,
                got,
            } => write!(
                f,
                "parameter {index}: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            ProblemError::WrongParamCount { expected, got } => {
                write!(f, "expected {expected} parameter matrices, got {got}")
            }
            ProblemError::Matrix(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProblemError {}

impl From<MatrixError> for ProblemError {
    fn from(e: MatrixError) -> Self {
        ProblemError::Matrix(e)
    }
}

/// Deterministic sample stream. Same seed, same draws, on every platform.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: rand_chacha::ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `[0, 1)` with 53 random mantissa bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in `0..n`, rejection-sampled so every value is equally
    /// likely.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }
}

/// What one fused oracle call reports: the pre-step sample loss plus norms of
/// the raw (pre-mixing) stochastic gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEval {
    pub loss: f64,
    /// Squared Frobenius norm of the raw minibatch gradient, all parameters.
    pub grad_sq_norm: f64,
    /// Largest absolute raw gradient entry across all parameters.
    pub grad_inf_norm: f64,
}

/// Constants under which the convergence diagnostics apply to a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// Lipschitz constant of the full gradient.
    pub smoothness: f64,
    /// Bound on the infinity norm of stochastic gradients, valid on the
    /// region the iterates are expected to stay in.
    pub grad_inf_bound: f64,
    /// Lower bound on the objective.
    pub f_star: f64,
}

/// Arrays that pin down the sampled dataset for reproducibility exports.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSnapshot {
    pub arrays: Vec<Matrix>,
}

/// A stochastic objective over one or more matrix parameters.
pub trait Problem {
    fn name(&self) -> &'static str;

    fn param_count(&self) -> usize;

    fn param_dims(&self, index: usize) -> (usize, usize);

    /// Deterministic starting point.
    fn initial_params(&self) -> Vec<Matrix>;

    /// Draw one sample and fold its gradient into the buffers:
    /// `buf_k <- decay * buf_k + (1 - decay) * grad_k`. Returns the sample
    /// loss at the current parameters along with raw gradient norms.
    fn accumulate_grad(
        &self,
        params: &[Matrix],
        sampler: &mut Sampler,
        grad_bufs: &mut [Matrix],
        decay: f64,
    ) -> Result<StepEval, ProblemError>;

    /// Draw one sample and return only its loss. Cloning the sampler before
    /// calls makes repeated evaluations see the same sample.
    fn sample_loss(&self, params: &[Matrix], sampler: &mut Sampler) -> Result<f64, ProblemError>;

    /// Deterministic objective (mean over the data distribution).
    fn full_loss(&self, params: &[Matrix]) -> Result<f64, ProblemError>;

    /// Deterministic mean gradient; allocates, intended for diagnostics.
    fn full_gradient(&self, params: &[Matrix]) -> Result<Vec<Matrix>, ProblemError>;

    /// Squared Frobenius norm of the deterministic gradient.
    fn full_grad_sq_norm(&self, params: &[Matrix]) -> Result<f64, ProblemError> {
        let gs = self.full_gradient(params)?;
        Ok(gs.iter().map(Matrix::sq_sum).sum())
    }

    /// Constants for the convergence bound, when the problem satisfies its
    /// assumptions with known values.
    fn theory_constants(&self) -> Option<TheoryConstants> {
        None
    }

    fn snapshot(&self) -> DatasetSnapshot;
}

fn check_params(
    problem: &dyn Problem,
    params: &[Matrix],
    bufs: Option<&[Matrix]>,
) -> Result<(), ProblemError> {
    if params.len() != problem.param_count() {
        return Err(ProblemError::WrongParamCount {
            expected: problem.param_count(),
            got: params.len(),
        });
    }
    for (index, p) in params.iter().enumerate() {
        let expected = problem.param_dims(index);
        if p.dims() != expected {
            return Err(ProblemError::ParamMismatch {
                index,
                expected,
                got: p.dims(),
            });
        }
    }
    if let Some(bufs) = bufs {
        if bufs.len() != params.len() {
            return Err(ProblemError::WrongParamCount {
                expected: params.len(),
                got: bufs.len(),
            });
        }
        for (index, (b, p)) in bufs.iter().zip(params).enumerate() {
            if b.dims() != p.dims() {
                return Err(ProblemError::ParamMismatch {
                    index,
                    expected: p.dims(),
                    got: b.dims(),
                });
            }
        }
    }
    Ok(())
}

/// `f(X) = 0.5 ||X - X*||_F^2` with entry-wise bounded-uniform gradient
/// noise: the stochastic gradient is `(X - X*) + xi`, `xi ~ U[-b, b]`.
/// Satisfies the diagnostics assumptions with `L = 1` and `f* = 0`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    target: Matrix,
    noise_bound: f64,
}

impl Quadratic {
    pub fn new(target: Matrix, noise_bound: f64) -> Result<Self, ProblemError> {
        if !(noise_bound >= 0.0) {
            return Err(ProblemError::BadParameter {
                field: "noise_bound",
                message: "must be nonnegative",
            });
        }
        Ok(Quadratic {
            target,
            noise_bound,
        })
    }

    /// Target all ones: the canonical unit-displacement instance.
    pub fn toward_ones(rows: usize, cols: usize, noise_bound: f64) -> Result<Self, ProblemError> {
        Self::new(Matrix::filled(rows, cols, 1.0)?, noise_bound)
    }

    pub fn target(&self) -> &Matrix {
        &self.target
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn param_count(&self) -> usize {
        1
    }

    fn param_dims(&self, _index: usize) -> (usize, usize) {
        self.target.dims()
    }

    fn initial_params(&self) -> Vec<Matrix> {
        vec![Matrix::zeros(self.target.rows(), self.target.cols()).expect("valid dims")]
    }

    fn accumulate_grad(
        &self,
        params: &[Matrix],
        sampler: &mut Sampler,
        grad_bufs: &mut [Matrix],
        decay: f64,
    ) -> Result<StepEval, ProblemError> {
        check_params(self, params, Some(grad_bufs))?;
        let x = &params[0];
        let buf = &mut grad_bufs[0];
        let b = self.noise_bound;
        let w = 1.0 - decay;
        let mut loss = 0.0;
        let mut grad_sq = 0.0;
        let mut grad_inf = 0.0f64;
        let xs = x.as_slice();
        let ts = self.target.as_slice();
        let bs = buf.as_mut_slice();
        for ((xv, tv), bv) in xs.iter().zip(ts).zip(bs) {
            let d = xv - tv;
            let noise = if b > 0.0 { sampler.uniform(-b, b) } else { 0.0 };
            let g = d + noise;
            loss += 0.5 * d * d + noise * d;
            grad_sq += g * g;
            let a = g.abs();
            if a > grad_inf {
                grad_inf = a;
            }
            *bv = decay * *bv + w * g;
        }
        Ok(StepEval {
            loss,
            grad_sq_norm: grad_sq,
            grad_inf_norm: grad_inf,
        })
    }

    fn sample_loss(&self, params: &[Matrix], sampler: &mut Sampler) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let x = &params[0];
        let b = self.noise_bound;
        let mut loss = 0.0;
        for (xv, tv) in x.as_slice().iter().zip(self.target.as_slice()) {
            let d = xv - tv;
            let noise = if b > 0.0 { sampler.uniform(-b, b) } else { 0.0 };
            loss += 0.5 * d * d + noise * d;
        }
        Ok(loss)
    }

    fn full_loss(&self, params: &[Matrix]) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let diff = params[0].sub(&self.target)?;
        Ok(0.5 * diff.sq_sum())
    }

    fn full_gradient(&self, params: &[Matrix]) -> Result<Vec<Matrix>, ProblemError> {
        check_params(self, params, None)?;
        Ok(vec![params[0].sub(&self.target)?])
    }

    fn full_grad_sq_norm(&self, params: &[Matrix]) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let mut acc = 0.0;
        for (xv, tv) in params[0].as_slice().iter().zip(self.target.as_slice()) {
            let d = xv - tv;
            acc += d * d;
        }
        Ok(acc)
    }

    fn theory_constants(&self) -> Option<TheoryConstants> {
        // Gradient bound on the envelope the iterates plausibly stay in:
        // twice the initial displacement plus the noise, with unit slack.
        Some(TheoryConstants {
            smoothness: 1.0,
            grad_inf_bound: 2.0 * self.target.inf_norm() + 2.0 * self.noise_bound + 1.0,
            f_star: 0.0,
        })
    }

    fn snapshot(&self) -> DatasetSnapshot {
        DatasetSnapshot {
            arrays: vec![self.target.clone()],
        }
    }
}

/// Multiclass softmax regression over a planted synthetic dataset.
///
/// Features are uniform in `[-1, 1]`; labels are the argmax of a planted
/// linear model's logits, except a `label_noise` fraction is resampled
/// uniformly at random. The stochastic oracle draws one `(y, z)` pair per
/// step; its gradient `(softmax(Xy) - e_z) y^T` is folded into the buffer
/// rank-one, so the only transients are length `m` and `n` vectors.
#[derive(Debug, Clone)]
pub struct SoftmaxRegression {
    classes: usize,
    features: usize,
    feats: Matrix,
    labels: Vec<usize>,
}

impl SoftmaxRegression {
    /// Planted-model dataset with 30% label noise.
    pub fn new(
        classes: usize,
        features: usize,
        dataset_size: usize,
        seed: u64,
    ) -> Result<Self, ProblemError> {
        Self::with_label_noise(classes, features, dataset_size, seed, 0.3)
    }

    pub fn with_label_noise(
        classes: usize,
        features: usize,
        dataset_size: usize,
        seed: u64,
        label_noise: f64,
    ) -> Result<Self, ProblemError> {
        if classes < 2 {
            return Err(ProblemError::BadParameter {
                field: "classes",
                message: "need at least two classes",
            });
        }
        if features == 0 || dataset_size == 0 {
            return Err(ProblemError::BadParameter {
                field: "features/dataset_size",
                message: "must be positive",
            });
        }
        if !(0.0..=1.0).contains(&label_noise) {
            return Err(ProblemError::BadParameter {
                field: "label_noise",
                message: "must lie in [0, 1]",
            });
        }
        let mut sampler = Sampler::new(seed);
        // Planted weights scaled so logits spread over a few units and the
        // clean labels carry real signal.
        let w_scale = 10.5 / fmath::sqrt(features as f64);
        let planted = Matrix::from_fn(classes, features, |_, _| {
            sampler.uniform(-w_scale, w_scale)
        })?;
        let feats = Matrix::from_fn(dataset_size, features, |_, _| sampler.uniform(-1.0, 1.0))?;
        let mut labels = Vec::with_capacity(dataset_size);
        for k in 0..dataset_size {
            let logits = planted.matvec(feats.row(k))?;
            let mut best = 0;
            for (i, v) in logits.iter().enumerate() {
                if *v > logits[best] {
                    best = i;
                }
            }
            let label = if sampler.next_f64() < label_noise {
                sampler.index(classes)
            } else {
                best
            };
            labels.push(label);
        }
        Ok(SoftmaxRegression {
            classes,
            features,
            feats,
            labels,
        })
    }

    pub fn dataset_size(&self) -> usize {
        self.labels.len()
    }

    /// Stable log-sum-exp and softmax of the logits; returns
    /// `(probs, log_sum_exp)` with the max already folded in.
    fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
        let mut max = logits[0];
        for &v in logits {
            if v > max {
                max = v;
            }
        }
        let mut probs: Vec<f64> = logits.iter().map(|v| fmath::exp(v - max)).collect();
        let mut sum = 0.0;
        for p in &probs {
            sum += p;
        }
        let inv = 1.0 / sum;
        for p in &mut probs {
            *p *= inv;
        }
        (probs, max + fmath::ln(sum))
    }

    fn sample_eval(&self, x: &Matrix, k: usize) -> Result<(Vec<f64>, f64), ProblemError> {
        let y = self.feats.row(k);
        let logits = x.matvec(y)?;
        let (probs, lse) = Self::softmax(&logits);
        let loss = lse - logits[self.labels[k]];
        Ok((probs, loss))
    }
}

impl Problem for SoftmaxRegression {
    fn name(&self) -> &'static str {
        "softmax"
    }

    fn param_count(&self) -> usize {
        1
    }

    fn param_dims(&self, _index: usize) -> (usize, usize) {
        (self.classes, self.features)
    }

    fn initial_params(&self) -> Vec<Matrix> {
        vec![Matrix::zeros(self.classes, self.features).expect("valid dims")]
    }

    fn accumulate_grad(
        &self,
        params: &[Matrix],
        sampler: &mut Sampler,
        grad_bufs: &mut [Matrix],
        decay: f64,
    ) -> Result<StepEval, ProblemError> {
        check_params(self, params, Some(grad_bufs))?;
        let k = sampler.index(self.dataset_size());
        let (mut err, loss) = self.sample_eval(&params[0], k)?;
        err[self.labels[k]] -= 1.0;
        let y = self.feats.row(k);
        // Rank-one gradient err y^T: norms come from the factor norms.
        let err_sq = vec_sq_norm(&err);
        let y_sq = vec_sq_norm(y);
        let mut err_inf = 0.0f64;
        for e in &err {
            let a = e.abs();
            if a > err_inf {
                err_inf = a;
            }
        }
        let mut y_inf = 0.0f64;
        for v in y {
            let a = v.abs();
            if a > y_inf {
                y_inf = a;
            }
        }
        let buf = &mut grad_bufs[0];
        let w = 1.0 - decay;
        let cols = self.features;
        for (i, &ei) in err.iter().enumerate() {
            let coef = w * ei;
            let row = &mut buf.as_mut_slice()[i * cols..(i + 1) * cols];
            for (bv, yv) in row.iter_mut().zip(y) {
                *bv = decay * *bv + coef * yv;
            }
        }
        Ok(StepEval {
            loss,
            grad_sq_norm: err_sq * y_sq,
            grad_inf_norm: err_inf * y_inf,
        })
    }

    fn sample_loss(&self, params: &[Matrix], sampler: &mut Sampler) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let k = sampler.index(self.dataset_size());
        Ok(self.sample_eval(&params[0], k)?.1)
    }

    fn full_loss(&self, params: &[Matrix]) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let mut acc = 0.0;
        for k in 0..self.dataset_size() {
            acc += self.sample_eval(&params[0], k)?.1;
        }
        Ok(acc / self.dataset_size() as f64)
    }

    fn full_gradient(&self, params: &[Matrix]) -> Result<Vec<Matrix>, ProblemError> {
        check_params(self, params, None)?;
        let mut grad = Matrix::zeros(self.classes, self.features)?;
        let scale = 1.0 / self.dataset_size() as f64;
        for k in 0..self.dataset_size() {
            let (mut err, _) = self.sample_eval(&params[0], k)?;
            err[self.labels[k]] -= 1.0;
            let y = self.feats.row(k);
            for (i, &ei) in err.iter().enumerate() {
                let coef = scale * ei;
                let row = &mut grad.as_mut_slice()[i * self.features..(i + 1) * self.features];
                for (gv, yv) in row.iter_mut().zip(y) {
                    *gv += coef * yv;
                }
            }
        }
        Ok(vec![grad])
    }

    fn theory_constants(&self) -> Option<TheoryConstants> {
        // |softmax error| <= 1 entry-wise, so per-sample gradients are
        // bounded by the largest absolute feature. The cross-entropy Hessian
        // in the logits is bounded by 1/2, giving L <= max ||y||^2 / 2.
        let mut max_feat = 0.0f64;
        let mut max_row_sq = 0.0f64;
        for k in 0..self.dataset_size() {
            let row = self.feats.row(k);
            let sq = vec_sq_norm(row);
            if sq > max_row_sq {
                max_row_sq = sq;
            }
            for v in row {
                let a = v.abs();
                if a > max_feat {
                    max_feat = a;
                }
            }
        }
        Some(TheoryConstants {
            smoothness: 0.5 * max_row_sq,
            grad_inf_bound: max_feat,
            f_star: 0.0,
        })
    }

    fn snapshot(&self) -> DatasetSnapshot {
        let labels = Matrix::from_fn(self.dataset_size(), 1, |k, _| self.labels[k] as f64)
            .expect("valid dims");
        DatasetSnapshot {
            arrays: vec![self.feats.clone(), labels],
        }
    }
}

/// Fully connected network trained by least squares against a planted
/// teacher of the same architecture; tanh on hidden layers, identity output.
/// Weight matrices are separate parameters updated one by one; the fused
/// backward pass fills every layer's buffer in a single traversal.
#[derive(Debug, Clone)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    feats: Matrix,
    targets: Matrix,
    init: Vec<Matrix>,
    batch: usize,
}

impl Mlp {
    /// Synthetic dataset from a planted teacher with the same layer layout.
    pub fn synthetic(
        layer_dims: &[usize],
        dataset_size: usize,
        batch: usize,
        seed: u64,
    ) -> Result<Self, ProblemError> {
        if layer_dims.len() < 2 {
            return Err(ProblemError::BadParameter {
                field: "layer_dims",
                message: "need an input and an output dimension",
            });
        }
        let mut sampler = Sampler::new(seed);
        let teacher = Self::random_weights(layer_dims, &mut sampler);
        let feats = Matrix::from_fn(dataset_size, layer_dims[0], |_, _| {
            sampler.uniform(-1.0, 1.0)
        })?;
        let out_dim = *layer_dims.last().expect("nonempty");
        let mut targets = Matrix::zeros(dataset_size, out_dim)?;
        for k in 0..dataset_size {
            let out = forward(&teacher, feats.row(k)).pop().expect("layers");
            for (j, v) in out.iter().enumerate() {
                targets.set(k, j, *v);
            }
        }
        let init = Self::random_weights(layer_dims, &mut sampler);
        Self::with_data(layer_dims, feats, targets, init, batch)
    }

    /// Explicit dataset and starting weights.
    pub fn with_data(
        layer_dims: &[usize],
        feats: Matrix,
        targets: Matrix,
        init: Vec<Matrix>,
        batch: usize,
    ) -> Result<Self, ProblemError> {
        if layer_dims.len() < 2 {
            return Err(ProblemError::BadParameter {
                field: "layer_dims",
                message: "need an input and an output dimension",
            });
        }
        if batch == 0 {
            return Err(ProblemError::BadParameter {
                field: "batch",
                message: "must be positive",
            });
        }
        if feats.cols() != layer_dims[0]
            || targets.cols() != *layer_dims.last().expect("nonempty")
            || feats.rows() != targets.rows()
        {
            return Err(ProblemError::BadParameter {
                field: "dataset",
                message: "feature/target shapes disagree with the layers",
            });
        }
        if init.len() != layer_dims.len() - 1 {
            return Err(ProblemError::WrongParamCount {
                expected: layer_dims.len() - 1,
                got: init.len(),
            });
        }
        for (l, w) in init.iter().enumerate() {
            if w.dims() != (layer_dims[l + 1], layer_dims[l]) {
                return Err(ProblemError::ParamMismatch {
                    index: l,
                    expected: (layer_dims[l + 1], layer_dims[l]),
                    got: w.dims(),
                });
            }
        }
        Ok(Mlp {
            layer_dims: layer_dims.to_vec(),
            feats,
            targets,
            init,
            batch,
        })
    }

    fn random_weights(layer_dims: &[usize], sampler: &mut Sampler) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(layer_dims.len() - 1);
        for l in 0..layer_dims.len() - 1 {
            let fan_in = layer_dims[l] as f64;
            let scale = 1.0 / fmath::sqrt(fan_in);
            out.push(
                Matrix::from_fn(layer_dims[l + 1], layer_dims[l], |_, _| {
                    sampler.uniform(-scale, scale)
                })
                .expect("positive dims"),
            );
        }
        out
    }

    pub fn dataset_size(&self) -> usize {
        self.feats.rows()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Loss and per-layer rank-one backprop pieces for one sample:
    /// activations `h_{l-1}` and deltas `d_l` with `grad_l = d_l h_{l-1}^T`.
    fn backward_sample(
        &self,
        params: &[Matrix],
        k: usize,
    ) -> Result<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>), ProblemError> {
        let layers = params.len();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
        acts.push(self.feats.row(k).to_vec());
        for (l, w) in params.iter().enumerate() {
            let mut a = w.matvec(acts.last().expect("nonempty"))?;
            if l + 1 < layers {
                for v in &mut a {
                    *v = fmath::tanh(*v);
                }
            }
            acts.push(a);
        }
        let out = acts.last().expect("nonempty");
        let target = self.targets.row(k);
        let mut delta: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
        let loss = 0.5 * vec_sq_norm(&delta);
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); layers];
        for l in (0..layers).rev() {
            deltas[l] = delta.clone();
            if l > 0 {
                let mut back = params[l].matvec_t(&delta)?;
                // derivative of tanh through the stored activation
                for (b, h) in back.iter_mut().zip(&acts[l]) {
                    *b *= 1.0 - h * h;
                }
                delta = back;
            }
        }
        Ok((loss, acts, deltas))
    }
}

impl Problem for Mlp {
    fn name(&self) -> &'static str {
        "mlp"
    }

    fn param_count(&self) -> usize {
        self.layer_dims.len() - 1
    }

    fn param_dims(&self, index: usize) -> (usize, usize) {
        (self.layer_dims[index + 1], self.layer_dims[index])
    }

    fn initial_params(&self) -> Vec<Matrix> {
        self.init.clone()
    }

    fn accumulate_grad(
        &self,
        params: &[Matrix],
        sampler: &mut Sampler,
        grad_bufs: &mut [Matrix],
        decay: f64,
    ) -> Result<StepEval, ProblemError> {
        check_params(self, params, Some(grad_bufs))?;
        let layers = params.len();
        let b = self.batch;
        let scale = (1.0 - decay) / b as f64;

        for buf in grad_bufs.iter_mut() {
            buf.scale_assign(decay);
        }

        let mut loss = 0.0;
        // Per-sample rank-one pieces, kept so the exact norm of the averaged
        // gradient (cross terms included) can be formed without ever
        // materializing it.
        let mut pieces: Vec<Vec<(Vec<f64>, Vec<f64>)>> = vec![Vec::with_capacity(b); layers];
        for _ in 0..b {
            let k = sampler.index(self.dataset_size());
            let (sample_loss, acts, deltas) = self.backward_sample(params, k)?;
            loss += sample_loss;
            for l in 0..layers {
                let delta = &deltas[l];
                let input = &acts[l];
                let buf = &mut grad_bufs[l];
                let cols = buf.cols();
                for (i, &di) in delta.iter().enumerate() {
                    let coef = scale * di;
                    let row = &mut buf.as_mut_slice()[i * cols..(i + 1) * cols];
                    for (bv, hv) in row.iter_mut().zip(input) {
                        *bv += coef * hv;
                    }
                }
                pieces[l].push((deltas[l].clone(), acts[l].clone()));
            }
        }
        loss /= b as f64;

        // ||sum_s d_s h_s^T / B||^2 = sum_{s,s'} (d_s . d_s')(h_s . h_s') / B^2
        let inv_b = 1.0 / b as f64;
        let mut grad_sq = 0.0;
        let mut grad_inf = 0.0f64;
        for layer_pieces in &pieces {
            for (s, (ds, hs)) in layer_pieces.iter().enumerate() {
                for (off, (ds2, hs2)) in layer_pieces[s..].iter().enumerate() {
                    let term = vec_dot(ds, ds2) * vec_dot(hs, hs2) * inv_b * inv_b;
                    grad_sq += if off == 0 { term } else { 2.0 * term };
                }
            }
            // infinity norm needs the averaged entries; row/column maxima of
            // the rank-one pieces are enough to bound each entry exactly
            // only by direct evaluation, so evaluate per entry.
            if let Some((d0, h0)) = layer_pieces.first() {
                for i in 0..d0.len() {
                    for j in 0..h0.len() {
                        let mut e = 0.0;
                        for (ds, hs) in layer_pieces {
                            e += ds[i] * hs[j];
                        }
                        let a = (e * inv_b).abs();
                        if a > grad_inf {
                            grad_inf = a;
                        }
                    }
                }
            }
        }
        Ok(StepEval {
            loss,
            grad_sq_norm: grad_sq,
            grad_inf_norm: grad_inf,
        })
    }

    fn sample_loss(&self, params: &[Matrix], sampler: &mut Sampler) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let mut loss = 0.0;
        for _ in 0..self.batch {
            let k = sampler.index(self.dataset_size());
            let out = forward(params, self.feats.row(k)).pop().expect("layers");
            let target = self.targets.row(k);
            let mut acc = 0.0;
            for (o, t) in out.iter().zip(target) {
                let d = o - t;
                acc += d * d;
            }
            loss += 0.5 * acc;
        }
        Ok(loss / self.batch as f64)
    }

    fn full_loss(&self, params: &[Matrix]) -> Result<f64, ProblemError> {
        check_params(self, params, None)?;
        let mut loss = 0.0;
        for k in 0..self.dataset_size() {
            let out = forward(params, self.feats.row(k)).pop().expect("layers");
            let target = self.targets.row(k);
            let mut acc = 0.0;
            for (o, t) in out.iter().zip(target) {
                let d = o - t;
                acc += d * d;
            }
            loss += 0.5 * acc;
        }
        Ok(loss / self.dataset_size() as f64)
    }

    fn full_gradient(&self, params: &[Matrix]) -> Result<Vec<Matrix>, ProblemError> {
        check_params(self, params, None)?;
        let layers = params.len();
        let mut grads: Vec<Matrix> = (0..layers)
            .map(|l| Matrix::zeros(self.param_dims(l).0, self.param_dims(l).1).expect("dims"))
            .collect();
        let scale = 1.0 / self.dataset_size() as f64;
        for k in 0..self.dataset_size() {
            let (_, acts, deltas) = self.backward_sample(params, k)?;
            for l in 0..layers {
                let cols = grads[l].cols();
                for (i, &di) in deltas[l].iter().enumerate() {
                    let coef = scale * di;
                    let row = &mut grads[l].as_mut_slice()[i * cols..(i + 1) * cols];
                    for (gv, hv) in row.iter_mut().zip(&acts[l]) {
                        *gv += coef * hv;
                    }
                }
            }
        }
        Ok(grads)
    }

    fn snapshot(&self) -> DatasetSnapshot {
        DatasetSnapshot {
            arrays: vec![self.feats.clone(), self.targets.clone()],
        }
    }
}

/// Forward pass returning every layer's activation (input first).
fn forward(params: &[Matrix], input: &[f64]) -> Vec<Vec<f64>> {
    let layers = params.len();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers);
    let mut current = input.to_vec();
    for (l, w) in params.iter().enumerate() {
        let mut a = w.matvec(&current).expect("shape checked by caller");
        if l + 1 < layers {
            for v in &mut a {
                *v = fmath::tanh(*v);
            }
        }
        acts.push(a.clone());
        current = a;
    }
    acts
}
