//! Mini-batch SGD with per-example gradient clipping and calibrated
//! Gaussian noise, returning the averaged iterate.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::mechanisms::{dpsgd_sigma, gaussian_noise, min_batch_size, PrivacyBudget, RandomStream};
use crate::model::{LinearModel, MulticlassModel};
use crate::numeric::{clip_in_place, dot, l2_norm};
use crate::risk::softmax_example_gradient;

use rand::Rng;

/// Parameter magnitude above which training aborts with a diagnostic.
const DIVERGENCE_BOUND: f64 = 1e12;

// Sub-stream layout under the training seed. Batches and noise live on
// per-step paths so draws are independent of evaluation order.
const PATH_INIT: u64 = 0;
const PATH_BATCH: u64 = 1;
const PATH_NOISE: u64 = 2;

/// Initial parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    /// i.i.d. `N(0, std²)` entries, drawn from the training seed.
    Gaussian { std: f64 },
    Vector(Vec<f64>),
}

/// Configuration for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub step_size: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub init: Init,
    /// Train a separate bias coordinate. Disabled for models whose features
    /// already carry a constant coordinate.
    pub use_bias: bool,
    /// Accept batches below the calibrated minimum instead of erroring.
    pub allow_small_batch: bool,
}

impl TrainConfig {
    pub fn new(steps: usize, step_size: f64, clip_norm: f64, batch_size: usize, seed: u64) -> Self {
        Self {
            steps,
            step_size,
            clip_norm,
            batch_size,
            seed,
            init: Init::Zero,
            use_bias: true,
            allow_small_batch: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be positive".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size must be a positive real, got {}",
                self.step_size
            )));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "clip norm must be positive, got {}",
                self.clip_norm
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Norm of the clipped mean gradient before noise.
    pub clipped_mean_norm: f64,
    /// Norm of the noise added to the mean.
    pub noise_norm: f64,
    /// Parameter norm after the update.
    pub param_norm: f64,
}

/// Diagnostics for a whole run: one record per step plus the averaged
/// iterate that is returned as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub steps: Vec<StepRecord>,
    pub averaged: Vec<f64>,
    pub sigma: f64,
}

/// Batch index sequence for step `step` of a run: `batch_size` draws with
/// replacement, deterministic in `(seed, step)`. A batch of exactly `n`
/// runs a full deterministic pass instead.
pub fn batch_indices(seed: u64, step: usize, n: usize, batch_size: usize) -> Vec<usize> {
    if batch_size == n {
        return (0..n).collect();
    }
    let mut rng = RandomStream::new(seed)
        .child(PATH_BATCH)
        .child(step as u64)
        .rng();
    (0..batch_size).map(|_| rng.random_range(0..n)).collect()
}

/// The noisy clipped mean of a set of gradients:
/// `(1/B)·Σ (clip(gᵢ, c) + νᵢ)` with per-example noise `νᵢ ~ N(0, σ²·I)`.
pub fn noisy_clipped_mean(
    gradients: &[Vec<f64>],
    clip_norm: f64,
    sigma: f64,
    stream: &RandomStream,
) -> Result<Vec<f64>> {
    if gradients.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(clip_norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clip norm must be positive, got {clip_norm}"
        )));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be a finite nonnegative real, got {sigma}"
        )));
    }
    let dim = gradients[0].len();
    let mut acc = vec![0.0; dim];
    let mut rng = stream.rng();
    let mut buf = vec![0.0; dim];
    for g in gradients {
        if g.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: g.len() });
        }
        buf.copy_from_slice(g);
        clip_in_place(&mut buf, clip_norm);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v;
        }
        if sigma > 0.0 {
            for a in acc.iter_mut() {
                *a += sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
        }
    }
    let inv = 1.0 / gradients.len() as f64;
    for a in acc.iter_mut() {
        *a *= inv;
    }
    Ok(acc)
}

/// The objective driving the generic training loop.
enum Problem<'a> {
    Margin {
        dataset: &'a LabeledDataset,
        loss: &'a LossSpec,
        bias: bool,
    },
    Softmax {
        dataset: &'a LabeledDataset,
        classes: usize,
        bias: bool,
    },
}

impl Problem<'_> {
    fn param_dim(&self) -> usize {
        match self {
            Problem::Margin { dataset, bias, .. } => dataset.dim() + usize::from(*bias),
            Problem::Softmax { dataset, classes, bias } => {
                classes * (dataset.dim() + usize::from(*bias))
            }
        }
    }

    fn gradient_into(&self, theta: &[f64], i: usize, out: &mut [f64]) -> Result<()> {
        match self {
            Problem::Margin { dataset, loss, bias } => {
                let x = dataset.row(i);
                let y = dataset.binary_label(i)?;
                let d = x.len();
                let score = dot(&theta[..d], x) + if *bias { theta[d] } else { 0.0 };
                let g = loss.phi_prime(y * score) * y;
                for (o, &v) in out[..d].iter_mut().zip(x) {
                    *o = g * v;
                }
                if *bias {
                    out[d] = g;
                }
                Ok(())
            }
            Problem::Softmax { dataset, classes, bias } => {
                let x = dataset.row(i);
                let y = dataset.class_label(i)?;
                let block = x.len() + usize::from(*bias);
                let mut scores = vec![0.0; *classes];
                for (k, s) in scores.iter_mut().enumerate() {
                    let blk = &theta[k * block..(k + 1) * block];
                    *s = dot(&blk[..x.len()], x) + if *bias { blk[x.len()] } else { 0.0 };
                }
                softmax_example_gradient(&scores, x, y, *bias, out);
                Ok(())
            }
        }
    }
}

fn initial_parameters(init: &Init, dim: usize, stream: &RandomStream) -> Result<Vec<f64>> {
    match init {
        Init::Zero => Ok(vec![0.0; dim]),
        Init::Gaussian { std } => {
            if !(*std > 0.0) || !std.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "init std must be a positive real, got {std}"
                )));
            }
            Ok(gaussian_noise(&stream.child(PATH_INIT), dim, *std))
        }
        Init::Vector(v) => {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("initial parameters".into()));
            }
            Ok(v.clone())
        }
    }
}

/// The shared optimizer loop over a flat parameter vector. Returns the
/// averaged iterate `(1/T)·Σ θ_t` over the post-update iterates.
fn train_parameters(
    problem: &Problem<'_>,
    config: &TrainConfig,
    budget: Option<&PrivacyBudget>,
) -> Result<(Vec<f64>, TrainTrace)> {
    config.validate()?;
    let dataset = match problem {
        Problem::Margin { dataset, .. } | Problem::Softmax { dataset, .. } => *dataset,
    };
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }

    let sigma = match budget {
        Some(b) => dpsgd_sigma(config.steps, config.clip_norm, n, b)?,
        None => 0.0,
    };
    if !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise scale is not finite (clip norm {})",
            config.clip_norm
        )));
    }
    // the calibration only guarantees privacy for large enough batches
    if sigma > 0.0 && !config.allow_small_batch {
        let minimum = min_batch_size(n, config.steps, budget.unwrap().epsilon);
        if config.batch_size < minimum {
            return Err(Error::BatchTooSmall { batch: config.batch_size, minimum });
        }
    }

    let stream = RandomStream::new(config.seed);
    let dim = problem.param_dim();
    let mut theta = initial_parameters(&config.init, dim, &stream)?;
    let step_sigma = sigma / (config.batch_size as f64).sqrt();

    let mut grad = vec![0.0; dim];
    let mut mean = vec![0.0; dim];
    let mut iterate_sum = vec![0.0; dim];
    let mut records = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let batch = batch_indices(config.seed, step, n, config.batch_size);

        mean.fill(0.0);
        for &i in &batch {
            problem.gradient_into(&theta, i, &mut grad)?;
            clip_in_place(&mut grad, config.clip_norm);
            for (m, g) in mean.iter_mut().zip(&grad) {
                *m += g;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        for m in mean.iter_mut() {
            *m *= inv;
        }
        let clipped_mean_norm = l2_norm(&mean);

        // single equivalent draw of the per-example noise mean
        let noise = gaussian_noise(&stream.child(PATH_NOISE).child(step as u64), dim, step_sigma);
        let noise_norm = l2_norm(&noise);

        for ((t, m), nz) in theta.iter_mut().zip(&mean).zip(&noise) {
            *t -= config.step_size * (m + nz);
        }

        for (s, t) in iterate_sum.iter_mut().zip(&theta) {
            if !t.is_finite() || t.abs() > DIVERGENCE_BOUND {
                return Err(Error::Diverged {
                    step,
                    detail: format!("parameter reached {t}"),
                });
            }
            *s += t;
        }
        records.push(StepRecord {
            step,
            clipped_mean_norm,
            noise_norm,
            param_norm: l2_norm(&theta),
        });
    }

    let averaged: Vec<f64> = iterate_sum
        .iter()
        .map(|s| s / config.steps as f64)
        .collect();
    let trace = TrainTrace {
        steps: records,
        averaged: averaged.clone(),
        sigma,
    };
    Ok((averaged, trace))
}

/// Train a binary linear classifier. With a budget, noise is calibrated by
/// [`dpsgd_sigma`]; without one the loop is plain clipped mini-batch SGD.
pub fn dpsgd_train(
    dataset: &LabeledDataset,
    loss: &LossSpec,
    config: &TrainConfig,
    budget: Option<&PrivacyBudget>,
) -> Result<(LinearModel, TrainTrace)> {
    let problem = Problem::Margin {
        dataset,
        loss,
        bias: config.use_bias,
    };
    let (theta, trace) = train_parameters(&problem, config, budget)?;
    let d = dataset.dim();
    let model = if config.use_bias {
        LinearModel::new(theta[..d].to_vec(), theta[d])?
    } else {
        LinearModel::new(theta, 0.0)?
    };
    Ok((model, trace))
}

/// Train a multiclass linear classifier under the multinomial logistic
/// loss; the per-example gradient is flattened to one vector before
/// clipping.
pub fn dpsgd_train_multiclass(
    dataset: &LabeledDataset,
    config: &TrainConfig,
    budget: Option<&PrivacyBudget>,
) -> Result<(MulticlassModel, TrainTrace)> {
    let classes = dataset
        .num_classes()
        .ok_or_else(|| Error::LabelDomain("multiclass training needs class labels".into()))?;
    let problem = Problem::Softmax {
        dataset,
        classes,
        bias: config.use_bias,
    };
    let (theta, trace) = train_parameters(&problem, config, budget)?;
    let d = dataset.dim();
    let block = d + usize::from(config.use_bias);
    let mut weights = Vec::with_capacity(classes * d);
    let mut biases = Vec::with_capacity(classes);
    for k in 0..classes {
        let blk = &theta[k * block..(k + 1) * block];
        weights.extend_from_slice(&blk[..d]);
        biases.push(if config.use_bias { blk[d] } else { 0.0 });
    }
    let model = MulticlassModel::new(weights, biases, classes, d)?;
    Ok((model, trace))
}
