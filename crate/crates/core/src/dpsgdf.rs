//! End-to-end private training with feature preprocessing: budget split,
//! preprocessing, bias-free SGD on the augmented features, and back-mapping
//! into the original space.

use crate::data::LabeledDataset;
use crate::dpsgd::{dpsgd_train, dpsgd_train_multiclass, TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::mechanisms::{split_budget, BudgetSplit, PrivacyBudget, RandomStream};
use crate::model::{LinearModel, MulticlassModel};
use crate::numeric::dot;
use crate::preprocess::{
    run_preprocess, run_preprocess_skip_quantile, AugmentedDataset, PreprocessConfig,
    PreprocessState,
};

// preprocessing draws live beside the trainer's sub-streams (0..2) under
// the same seed
const PATH_PREPROCESS: u64 = 3;

/// Configuration of the preprocessed private trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct DpsgdfConfig {
    pub train: TrainConfig,
    /// Budget fractions for (mean, quantile, sgd); must sum to 1.
    pub budget_fractions: [f64; 3],
    pub preprocess: PreprocessConfig,
    /// Skip the quantile and feature-clipping steps; translated rows keep
    /// their norms and carry a unit bias coordinate.
    pub skip_quantile: bool,
}

impl DpsgdfConfig {
    pub fn new(train: TrainConfig) -> Self {
        Self {
            train,
            budget_fractions: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            preprocess: PreprocessConfig::default(),
            skip_quantile: false,
        }
    }

    /// Fractions giving the preprocessing phase a total of `eps_f` out of
    /// ε: the mean and quantile each get `eps_f/2`, the SGD phase the rest.
    pub fn with_preprocessing_epsilon(mut self, eps_f: f64, epsilon: f64) -> Result<Self> {
        if !(eps_f > 0.0 && eps_f < epsilon) {
            return Err(Error::Budget(format!(
                "preprocessing budget {eps_f} must lie in (0, {epsilon})"
            )));
        }
        let f = eps_f / epsilon;
        self.budget_fractions = [f / 2.0, f / 2.0, 1.0 - f];
        Ok(self)
    }
}

/// Everything produced by one preprocessed training run.
#[derive(Debug, Clone)]
pub struct DpsgdfOutcome {
    pub model: LinearModel,
    pub state: PreprocessState,
    pub trace: TrainTrace,
    pub split: BudgetSplit,
}

fn preprocess_phase(
    dataset: &LabeledDataset,
    config: &DpsgdfConfig,
    split: &BudgetSplit,
) -> Result<(AugmentedDataset, PreprocessState)> {
    let stream = RandomStream::new(config.train.seed).child(PATH_PREPROCESS);
    if config.skip_quantile {
        run_preprocess_skip_quantile(
            dataset,
            &split.part(0),
            &split.part(1),
            &config.preprocess,
            &stream,
        )
    } else {
        run_preprocess(
            dataset,
            &split.part(0),
            &split.part(1),
            &config.preprocess,
            &stream,
        )
    }
}

/// Map a bias-free parameter vector over `(x − μ̂, τ)` back to the original
/// space: `w = θ[..d]`, `b = τ·θ[d] − w·μ̂`.
fn back_map(theta: &[f64], state: &PreprocessState) -> Result<LinearModel> {
    let d = state.mu_hat.len();
    debug_assert_eq!(theta.len(), d + 1);
    let w = theta[..d].to_vec();
    let b = state.tau * theta[d] - dot(&w, &state.mu_hat);
    LinearModel::new(w, b)
}

/// Train a binary linear classifier with private feature preprocessing.
///
/// The budget is split three ways; the augmented model is trained without a
/// separate bias (the features carry a constant coordinate) and the result
/// is mapped back to the original feature space.
pub fn dpsgdf_train(
    dataset: &LabeledDataset,
    loss: &LossSpec,
    config: &DpsgdfConfig,
    budget: &PrivacyBudget,
) -> Result<DpsgdfOutcome> {
    let split = split_budget(*budget, &config.budget_fractions)?;
    let (aug, state) = preprocess_phase(dataset, config, &split)?;

    let mut train = config.train.clone();
    train.use_bias = false;
    let (aug_model, trace) = dpsgd_train(&aug.data, loss, &train, Some(&split.part(2)))?;

    let model = back_map(&aug_model.w, &state)?;
    split.check_sound()?;
    Ok(DpsgdfOutcome {
        model,
        state,
        trace,
        split,
    })
}

/// Multiclass outcome of the preprocessed trainer.
#[derive(Debug, Clone)]
pub struct DpsgdfMulticlassOutcome {
    pub model: MulticlassModel,
    pub state: PreprocessState,
    pub trace: TrainTrace,
    pub split: BudgetSplit,
}

/// Multiclass variant: the preprocessing is label-free, so it is shared
/// verbatim; each class scorer is back-mapped independently.
pub fn dpsgdf_train_multiclass(
    dataset: &LabeledDataset,
    config: &DpsgdfConfig,
    budget: &PrivacyBudget,
) -> Result<DpsgdfMulticlassOutcome> {
    let classes = dataset
        .num_classes()
        .ok_or_else(|| Error::LabelDomain("multiclass training needs class labels".into()))?;
    let split = split_budget(*budget, &config.budget_fractions)?;
    let (aug, state) = preprocess_phase(dataset, config, &split)?;

    let mut train = config.train.clone();
    train.use_bias = false;
    let (aug_model, trace) = dpsgd_train_multiclass(&aug.data, &train, Some(&split.part(2)))?;

    let d = dataset.dim();
    let mut weights = Vec::with_capacity(classes * d);
    let mut biases = Vec::with_capacity(classes);
    for k in 0..classes {
        let mut theta = aug_model.class_weights(k).to_vec();
        debug_assert_eq!(theta.len(), d + 1);
        let tail = theta.pop().unwrap();
        let b = state.tau * tail - dot(&theta, &state.mu_hat);
        weights.extend_from_slice(&theta);
        biases.push(b);
    }
    let model = MulticlassModel::new(weights, biases, classes, d)?;
    split.check_sound()?;
    Ok(DpsgdfMulticlassOutcome {
        model,
        state,
        trace,
        split,
    })
}

/// Excess-risk scale of the preprocessed trainer, with unit constants:
/// `G·‖θ‖·diam·sqrt(rank·ln(1/δ))/(n·ε) + (G·‖θ‖·R + φ(0))·ln(n)/(n·ε)`.
/// A reporting aid, not a guarantee.
pub fn theoretical_bound_dpsgdf(
    lipschitz: f64,
    theta_norm: f64,
    diameter: f64,
    radius: f64,
    rank: usize,
    n: usize,
    budget: &PrivacyBudget,
    phi_at_zero: f64,
) -> f64 {
    let ne = n as f64 * budget.epsilon;
    let leading =
        lipschitz * theta_norm * diameter * (rank as f64 * (1.0 / budget.delta).ln()).sqrt() / ne;
    let tail = (lipschitz * theta_norm * radius + phi_at_zero) * (n as f64).ln() / ne;
    leading + tail
}

/// Excess-risk scale of the plain private trainer, with unit constants:
/// `2·G·‖θ‖_M·R·sqrt(rank·ln(1/δ))/(n·ε)`.
pub fn theoretical_bound_dpsgd(
    lipschitz: f64,
    theta_seminorm: f64,
    radius: f64,
    rank: usize,
    n: usize,
    budget: &PrivacyBudget,
) -> f64 {
    let ne = n as f64 * budget.epsilon;
    2.0 * lipschitz * theta_seminorm * radius * (rank as f64 * (1.0 / budget.delta).ln()).sqrt()
        / ne
}
