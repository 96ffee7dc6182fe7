//! Differentially private linear classification.
//!
//! The crate provides clipped-gradient private SGD ([`dpsgd_train`]), a
//! variant with private feature preprocessing ([`dpsgdf_train`]: private
//! mean, private distance quantile, translation with bias augmentation, and
//! feature clipping), the mechanisms they are built from, and a
//! benchmark/analysis harness around them.
//!
//! Every randomized component draws from seeded, path-addressed streams, so
//! runs are bitwise reproducible regardless of thread count.

pub mod analysis;
pub mod data;
pub mod data_io;
pub mod dpsgd;
pub mod dpsgdf;
mod error;
pub mod loss;
pub mod mechanisms;
pub mod model;
pub mod numeric;
pub mod preprocess;
pub mod risk;

pub use analysis::{
    design_rank, excess_loss, make_counterexample, separation_experiment, Algorithm,
    CounterexampleSpec, CounterexampleVariant, RankReport, SeparationConfig, SeparationGrid,
    SeparationReport,
};
pub use data::{LabeledDataset, Labels};
pub use data_io::{binarize, load_csv_features, load_idx_pair, read_manifest, write_manifest, RunManifest};
pub use dpsgd::{
    batch_indices, dpsgd_train, dpsgd_train_multiclass, noisy_clipped_mean, Init, StepRecord,
    TrainConfig, TrainTrace,
};
pub use dpsgdf::{
    dpsgdf_train, dpsgdf_train_multiclass, theoretical_bound_dpsgd, theoretical_bound_dpsgdf,
    DpsgdfConfig, DpsgdfMulticlassOutcome, DpsgdfOutcome,
};
pub use error::{Error, Result};
pub use loss::LossSpec;
pub use mechanisms::{
    default_target_rank, dpsgd_sigma, gaussian_noise, min_batch_size, private_quantile,
    split_budget, BudgetSplit, PrivacyBudget, RandomStream, DEFAULT_GRID_SIZE,
};
pub use model::{
    binary_accuracy, check_nontrivial, margin_score, multiclass_accuracy, LinearModel,
    MulticlassModel,
};
pub use numeric::clip;
pub use preprocess::{
    distance_set, feature_clip, private_mean, run_preprocess, run_preprocess_skip_quantile,
    translate_augment, AugmentedDataset, MeanMode, PreprocessConfig, PreprocessState,
};
pub use risk::{empirical_loss, per_example_gradient, softmax_empirical_loss};
