//! Private feature preprocessing: private mean of features, private
//! quantile of distances, translation plus bias augmentation, and feature
//! clipping.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::mechanisms::{
    default_target_rank, gaussian_noise, private_quantile, PrivacyBudget, RandomStream,
    DEFAULT_GRID_SIZE,
};
use crate::numeric::{clip_in_place, l2_dist, l2_norm};

/// How the feature-mean step draws its noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    /// Gaussian mechanism calibrated to the scaled-row sensitivity.
    Private,
    /// Zero-noise limit of the same estimator. Not private; an ablation
    /// knob for isolating the effect of mean-estimation error.
    Oracle,
}

/// Knobs for the preprocessing pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Norm `R₀` that rows are scaled to inside the mean estimator.
    pub feature_norm: f64,
    /// Candidate-grid resolution of the quantile mechanism.
    pub grid_size: usize,
    /// Quantile target rank; `None` uses `n − ceil((100/ε)·ln n)` clamped
    /// to `[1, n]`.
    pub target_rank: Option<usize>,
    pub mean_mode: MeanMode,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            feature_norm: 1.0,
            grid_size: DEFAULT_GRID_SIZE,
            target_rank: None,
            mean_mode: MeanMode::Private,
        }
    }
}

/// Output of the first two preprocessing steps: the private feature mean,
/// the private distance threshold, and the realized outlier count.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessState {
    pub mu_hat: Vec<f64>,
    pub tau: f64,
    /// Number of rows whose distance to `mu_hat` exceeded `tau`, i.e. the
    /// rows shrunk by the feature clip.
    pub clipped_count: usize,
    /// Budget parts consumed by the preprocessing phase.
    pub budget_used: Vec<PrivacyBudget>,
}

/// A translated dataset with a constant bias coordinate appended: row i is
/// `(x_i − μ̂, τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset {
    pub data: LabeledDataset,
    pub tau: f64,
}

/// Gaussian-mechanism mean of the rows scaled to norm exactly `r0` (zero
/// rows stay zero): `mean + N(0, σ_m²·I)` with
/// `σ_m = (2·r0/n)·sqrt(2·ln(1.25/δ))/ε`.
pub fn private_mean(
    dataset: &LabeledDataset,
    budget: &PrivacyBudget,
    r0: f64,
    stream: &RandomStream,
) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "normalization norm must be a positive real, got {r0}"
        )));
    }
    let n = dataset.len() as f64;
    let d = dataset.dim();
    let mut mean = vec![0.0; d];
    for row in dataset.rows() {
        let norm = l2_norm(row);
        if norm > 0.0 {
            let scale = r0 / norm;
            for (m, v) in mean.iter_mut().zip(row) {
                *m += scale * v;
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }

    let sigma = if budget.epsilon.is_infinite() {
        0.0
    } else {
        (2.0 * r0 / n) * (2.0 * (1.25 / budget.delta).ln()).sqrt() / budget.epsilon
    };
    let noise = gaussian_noise(stream, d, sigma);
    for (m, z) in mean.iter_mut().zip(&noise) {
        *m += z;
    }
    Ok(mean)
}

/// Noise scale used by [`private_mean`], exposed for calibration checks.
pub fn private_mean_sigma(n: usize, r0: f64, budget: &PrivacyBudget) -> f64 {
    if budget.epsilon.is_infinite() {
        0.0
    } else {
        (2.0 * r0 / n as f64) * (2.0 * (1.25 / budget.delta).ln()).sqrt() / budget.epsilon
    }
}

/// Distances of every feature row to a center: `{‖x_i − μ̂‖₂}`.
pub fn distance_set(dataset: &LabeledDataset, mu_hat: &[f64]) -> Result<Vec<f64>> {
    if mu_hat.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: mu_hat.len(),
        });
    }
    Ok(dataset.rows().map(|row| l2_dist(row, mu_hat)).collect())
}

/// Translate rows by `μ̂` and append a constant bias coordinate `τ`:
/// row i becomes `(x_i − μ̂, τ)`. Labels are unchanged.
pub fn translate_augment(
    dataset: &LabeledDataset,
    mu_hat: &[f64],
    tau: f64,
) -> Result<AugmentedDataset> {
    if mu_hat.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: mu_hat.len(),
        });
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bias coordinate must be a positive real, got {tau}"
        )));
    }
    if mu_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("translation center".into()));
    }
    let rows: Vec<Vec<f64>> = dataset
        .rows()
        .map(|row| {
            let mut out = Vec::with_capacity(row.len() + 1);
            out.extend(row.iter().zip(mu_hat).map(|(x, m)| x - m));
            out.push(tau);
            out
        })
        .collect();
    Ok(AugmentedDataset {
        data: LabeledDataset::from_rows(rows, dataset.labels().clone())?,
        tau,
    })
}

/// Clip every augmented row to norm `√2·τ`. Labels are unchanged.
pub fn feature_clip(aug: &AugmentedDataset) -> Result<AugmentedDataset> {
    let bound = std::f64::consts::SQRT_2 * aug.tau;
    let rows: Vec<Vec<f64>> = aug
        .data
        .rows()
        .map(|row| {
            let mut out = row.to_vec();
            clip_in_place(&mut out, bound);
            out
        })
        .collect();
    Ok(AugmentedDataset {
        data: LabeledDataset::from_rows(rows, aug.data.labels().clone())?,
        tau: aug.tau,
    })
}

/// The composed pipeline: private mean, distance quantile, translation with
/// bias augmentation, and feature clipping.
pub fn run_preprocess(
    dataset: &LabeledDataset,
    budget_mean: &PrivacyBudget,
    budget_quantile: &PrivacyBudget,
    config: &PreprocessConfig,
    stream: &RandomStream,
) -> Result<(AugmentedDataset, PreprocessState)> {
    let mean_budget = match config.mean_mode {
        MeanMode::Private => *budget_mean,
        MeanMode::Oracle => PrivacyBudget::non_private(),
    };
    let mu_hat = private_mean(dataset, &mean_budget, config.feature_norm, &stream.child(0))?;

    let distances = distance_set(dataset, &mu_hat)?;
    let range_r = dataset.radius() + l2_norm(&mu_hat);
    if !(range_r > 0.0) {
        return Err(Error::InvalidParameter(
            "degenerate dataset: zero distance range".into(),
        ));
    }
    let rank = config
        .target_rank
        .unwrap_or_else(|| default_target_rank(dataset.len(), budget_quantile.epsilon));
    let mut tau = private_quantile(
        &distances,
        rank,
        budget_quantile,
        range_r,
        config.grid_size,
        &stream.child(1),
    )?;
    if tau <= 0.0 {
        // the grid includes 0; the bias coordinate needs a positive scale
        tau = range_r / config.grid_size as f64;
    }

    let translated = translate_augment(dataset, &mu_hat, tau)?;
    let clipped = feature_clip(&translated)?;
    let clipped_count = distances.iter().filter(|&&d| d > tau).count();

    Ok((
        clipped,
        PreprocessState {
            mu_hat,
            tau,
            clipped_count,
            budget_used: vec![*budget_mean, *budget_quantile],
        },
    ))
}

/// Variant pipeline that skips the quantile and clipping steps: rows are
/// translated and augmented with a unit bias coordinate, keeping their
/// norms otherwise unchanged. The quantile budget part is folded into the
/// mean estimate.
pub fn run_preprocess_skip_quantile(
    dataset: &LabeledDataset,
    budget_mean: &PrivacyBudget,
    budget_quantile: &PrivacyBudget,
    config: &PreprocessConfig,
    stream: &RandomStream,
) -> Result<(AugmentedDataset, PreprocessState)> {
    let merged = PrivacyBudget {
        epsilon: budget_mean.epsilon + budget_quantile.epsilon,
        delta: budget_mean.delta + budget_quantile.delta,
    };
    let mean_budget = match config.mean_mode {
        MeanMode::Private => merged,
        MeanMode::Oracle => PrivacyBudget::non_private(),
    };
    let mu_hat = private_mean(dataset, &mean_budget, config.feature_norm, &stream.child(0))?;
    let translated = translate_augment(dataset, &mu_hat, 1.0)?;
    Ok((
        translated,
        PreprocessState {
            mu_hat,
            tau: 1.0,
            clipped_count: 0,
            budget_used: vec![merged],
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{design_rank, make_counterexample, CounterexampleSpec, CounterexampleVariant};
    use crate::data::Labels;
    use crate::loss::LossSpec;
    use crate::model::LinearModel;
    use crate::numeric::dot;
    use crate::risk::empirical_loss;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn binary(rows: Vec<Vec<f64>>, ys: Vec<i8>) -> LabeledDataset {
        LabeledDataset::from_rows(rows, Labels::Binary(ys)).unwrap()
    }

    #[test]
    fn exact_mean_of_identical_rows_is_that_row() {
        let ds = binary(vec![vec![0.6, 0.8]; 5], vec![1, -1, 1, -1, 1]);
        let mu = private_mean(&ds, &PrivacyBudget::non_private(), 1.0, &RandomStream::new(0))
            .unwrap();
        assert!((mu[0] - 0.6).abs() < 1e-12);
        assert!((mu[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn exact_mean_of_antipodal_rows_is_zero() {
        let ds = binary(vec![vec![2.0, 0.0], vec![-2.0, 0.0]], vec![1, -1]);
        let mu = private_mean(&ds, &PrivacyBudget::non_private(), 1.0, &RandomStream::new(0))
            .unwrap();
        assert_eq!(mu, vec![0.0, 0.0]);
    }

    #[test]
    fn mean_noise_rms_matches_calibration() {
        // clustered rows: the scaled mean is fixed, so deviations are pure noise
        let n = 1000usize;
        let ds = binary(vec![vec![3.0, 4.0]; n], vec![1; n].iter().map(|_| 1i8).collect());
        let budget = PrivacyBudget::new(0.025, 1e-5).unwrap();
        let sigma = private_mean_sigma(n, 1.0, &budget);
        let truth = vec![0.6, 0.8];

        let trials = 500usize;
        let mut sq = 0.0;
        for seed in 0..trials {
            let mu = private_mean(&ds, &budget, 1.0, &RandomStream::new(seed as u64)).unwrap();
            sq += mu.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        let rms = (sq / trials as f64).sqrt();
        let expected = sigma * (2.0f64).sqrt();
        assert!(
            (rms - expected).abs() <= 0.10 * expected,
            "rms {rms} vs σ·√d {expected}"
        );
    }

    #[test]
    fn distance_set_examples() {
        let ds = binary(vec![vec![1.0, 1.0]], vec![1]);
        assert_eq!(distance_set(&ds, &[1.0, 1.0]).unwrap(), vec![0.0]);

        let ds = binary(vec![vec![0.0, 0.0], vec![3.0, 4.0]], vec![1, -1]);
        assert_eq!(distance_set(&ds, &[0.0, 0.0]).unwrap(), vec![0.0, 5.0]);
    }

    #[test]
    fn translate_augment_examples() {
        let ds = binary(vec![vec![5.0]], vec![1]);
        let aug = translate_augment(&ds, &[4.0], 2.0).unwrap();
        assert_eq!(aug.data.row(0), &[1.0, 2.0]);

        let ds = binary(vec![vec![1.5, -2.5]], vec![1]);
        let aug = translate_augment(&ds, &[1.5, -2.5], 0.7).unwrap();
        assert_eq!(aug.data.row(0), &[0.0, 0.0, 0.7]);
    }

    #[test]
    fn translate_augment_rejects_bad_tau() {
        let ds = binary(vec![vec![1.0]], vec![1]);
        assert!(translate_augment(&ds, &[0.0], 0.0).is_err());
        assert!(translate_augment(&ds, &[0.0], -1.0).is_err());
    }

    /// The reparametrization (w, b) ↦ (w, (b + w·μ̂)/τ) preserves the
    /// empirical loss exactly.
    #[test]
    fn loss_is_preserved_under_translation_and_augmentation() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let losses = [LossSpec::hinge(), LossSpec::logistic()];
        for trial in 0..1000 {
            let d = rng.random_range(1..=20usize);
            let n = rng.random_range(1..=12usize);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let ys: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            let ds = binary(rows, ys);

            let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let tau = rng.random_range(0.1..4.0);
            let aug = translate_augment(&ds, &mu, tau).unwrap();

            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-2.0..2.0);
            let loss = &losses[trial % 2];

            let original = LinearModel::new(w.clone(), b).unwrap();
            let mut w2 = w.clone();
            w2.push((b + dot(&w, &mu)) / tau);
            let mapped = LinearModel::new(w2, 0.0).unwrap();

            let l0 = empirical_loss(&original, &ds, loss).unwrap();
            let l1 = empirical_loss(&mapped, &aug.data, loss).unwrap();
            assert!(
                (l0 - l1).abs() / (1.0 + l0.abs()) <= 1e-9,
                "trial {trial}: {l0} vs {l1}"
            );
        }
    }

    #[test]
    fn feature_clip_examples() {
        let tau = 1.0;
        let within = AugmentedDataset {
            data: binary(vec![vec![0.5, 0.5, tau]], vec![1]),
            tau,
        };
        let clipped = feature_clip(&within).unwrap();
        assert_eq!(clipped.data.row(0), within.data.row(0));

        // row (2τ, 0, τ) has norm τ√5 > τ√2: scaled by √2/√5
        let out = AugmentedDataset {
            data: binary(vec![vec![2.0, 0.0, 1.0]], vec![1]),
            tau,
        };
        let clipped = feature_clip(&out).unwrap();
        let scale = (2.0f64 / 5.0).sqrt();
        assert!((clipped.data.row(0)[0] - 2.0 * scale).abs() < 1e-12);
        assert!((clipped.data.row(0)[2] - scale).abs() < 1e-12);
    }

    #[test]
    fn bias_coordinate_invariant_after_clipping() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for _ in 0..50 {
            let n = rng.random_range(2..20usize);
            let d = rng.random_range(1..5usize);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
                .collect();
            let ys = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            let ds = binary(rows, ys);
            let mu = vec![0.25; d];
            let tau = rng.random_range(0.2..2.0);
            let aug = translate_augment(&ds, &mu, tau).unwrap();
            for row in aug.data.rows() {
                assert_eq!(row[d], tau);
            }
            let clipped = feature_clip(&aug).unwrap();
            let bound = std::f64::consts::SQRT_2 * tau * (1.0 + 4.0 * f64::EPSILON);
            for row in clipped.data.rows() {
                assert!(row[d] > 0.0 && row[d] <= tau);
                assert!(l2_norm(row) <= bound);
            }
        }
    }

    #[test]
    fn rank_is_preserved_by_clipping_and_grows_little_under_augmentation() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..100 {
            let n = rng.random_range(2..=50usize);
            let d = rng.random_range(1..=10usize);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let ys = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            let ds = binary(rows, ys);
            let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            // small τ so clipping genuinely shrinks rows
            let tau = rng.random_range(0.05..0.5);
            let aug = translate_augment(&ds, &mu, tau).unwrap();
            let clipped = feature_clip(&aug).unwrap();

            let rank_base = design_rank(&ds, None).rank;
            let rank_aug = design_rank(&aug.data, None).rank;
            let rank_clipped = design_rank(&clipped.data, None).rank;
            assert_eq!(rank_aug, rank_clipped);
            assert!(rank_aug <= rank_base + 5);
        }
    }

    #[test]
    fn pipeline_zero_noise_keeps_clustered_data_unclipped() {
        let n = 16usize;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0 + 0.01 * i as f64, 2.0]).collect();
        let ds = binary(rows, (0..n).map(|_| 1).collect());
        let inf = PrivacyBudget::non_private();
        let config = PreprocessConfig {
            feature_norm: ds.radius(),
            ..Default::default()
        };
        let (_, state) =
            run_preprocess(&ds, &inf, &inf, &config, &RandomStream::new(0)).unwrap();
        assert_eq!(state.clipped_count, 0);
        assert!(state.tau > 0.0);
    }

    #[test]
    fn pipeline_zero_noise_threshold_tracks_the_cluster_spread() {
        // features of norm ≈ 100 whose mutual distances are 2: the
        // threshold must come out near the spread, not the norm
        let spec = CounterexampleSpec {
            mu: 100.0,
            n: 64,
            variant: CounterexampleVariant::Standard,
        };
        let ds = make_counterexample(&spec).unwrap();
        let inf = PrivacyBudget::non_private();
        let config = PreprocessConfig {
            feature_norm: ds.radius(),
            ..Default::default()
        };
        let (_, state) =
            run_preprocess(&ds, &inf, &inf, &config, &RandomStream::new(0)).unwrap();
        assert!(state.tau <= 4.0, "tau {} should be O(1)", state.tau);
    }

    #[test]
    fn pipeline_outlier_count_respects_the_allowance() {
        let n = 400usize;
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let ds = binary(rows, (0..n).map(|_| 1).collect());
        let eps_q = 1.0;
        let part = PrivacyBudget::new(eps_q, 1e-5).unwrap();
        let allowance = (125.0 / eps_q) * (n as f64).ln();
        let config = PreprocessConfig {
            feature_norm: ds.radius(),
            ..Default::default()
        };

        let trials = 500usize;
        let mut hits = 0usize;
        for seed in 0..trials {
            let (_, state) =
                run_preprocess(&ds, &part, &part, &config, &RandomStream::new(seed as u64))
                    .unwrap();
            if (state.clipped_count as f64) <= allowance {
                hits += 1;
            }
        }
        assert!(hits * 10 >= trials * 9, "{hits}/{trials} within allowance");
    }

    #[test]
    fn skip_quantile_keeps_row_norms_and_unit_bias() {
        let ds = binary(vec![vec![3.0, 0.0], vec![0.0, 4.0]], vec![1, -1]);
        let inf = PrivacyBudget::non_private();
        let config = PreprocessConfig {
            feature_norm: ds.radius(),
            mean_mode: MeanMode::Oracle,
            ..Default::default()
        };
        let (aug, state) =
            run_preprocess_skip_quantile(&ds, &inf, &inf, &config, &RandomStream::new(0))
                .unwrap();
        assert_eq!(state.tau, 1.0);
        assert_eq!(state.clipped_count, 0);
        for row in aug.data.rows() {
            assert_eq!(row[2], 1.0);
        }
    }
}
