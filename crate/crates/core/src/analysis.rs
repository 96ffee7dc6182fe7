//! Stress instance for plain private SGD, excess-loss evaluation,
//! design-matrix rank and seminorm diagnostics, and the Monte-Carlo
//! separation experiment.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{LabeledDataset, Labels};
use crate::dpsgd::{dpsgd_train, Init, TrainConfig};
use crate::dpsgdf::{dpsgdf_train, DpsgdfConfig};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::mechanisms::PrivacyBudget;
use crate::model::LinearModel;
use crate::numeric::dot;
use crate::preprocess::{MeanMode, PreprocessConfig};
use crate::risk::empirical_loss;

/// Which of the two mirrored label assignments to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleVariant {
    /// `(μ, 1) → +1`, `(μ, −1) → −1`.
    Standard,
    /// Same features with negated labels.
    LabelFlipped,
}

impl CounterexampleVariant {
    pub fn name(self) -> &'static str {
        match self {
            CounterexampleVariant::Standard => "standard",
            CounterexampleVariant::LabelFlipped => "flipped",
        }
    }
}

/// The two-cluster instance: n/2 copies of `(μ, 1)` and n/2 of `(μ, −1)`.
/// Its diameter is 2 for every μ while the feature norms grow with μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleSpec {
    pub mu: f64,
    pub n: usize,
    pub variant: CounterexampleVariant,
}

pub fn make_counterexample(spec: &CounterexampleSpec) -> Result<LabeledDataset> {
    if spec.n == 0 || spec.n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "instance size must be even and positive, got {}",
            spec.n
        )));
    }
    if !(spec.mu > 0.0) || !spec.mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "feature scale must be a positive real, got {}",
            spec.mu
        )));
    }
    let half = spec.n / 2;
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    let sign = match spec.variant {
        CounterexampleVariant::Standard => 1i8,
        CounterexampleVariant::LabelFlipped => -1i8,
    };
    for _ in 0..half {
        rows.push(vec![spec.mu, 1.0]);
        labels.push(sign);
    }
    for _ in 0..half {
        rows.push(vec![spec.mu, -1.0]);
        labels.push(-sign);
    }
    LabeledDataset::from_rows(rows, Labels::Binary(labels))
}

/// `L(model) − optimum`, snapped to 0 when the difference is within −1e−9.
/// A more negative result is returned as-is: it means the supplied optimum
/// was not actually optimal.
pub fn excess_loss(
    model: &LinearModel,
    dataset: &LabeledDataset,
    loss: &LossSpec,
    optimum_value: f64,
) -> Result<f64> {
    let diff = empirical_loss(model, dataset, loss)? - optimum_value;
    if diff < -1e-9 {
        Ok(diff)
    } else {
        Ok(diff.max(0.0))
    }
}

/// Numerical rank and spectrum of the feature matrix, plus the orthonormal
/// basis of the retained row space for seminorm queries.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    /// Singular values of the feature matrix, descending.
    pub singular_values: Vec<f64>,
    basis: Vec<Vec<f64>>, // rank orthonormal vectors of dim d
}

impl RankReport {
    /// Seminorm `‖v‖_M = ‖M·v‖₂` where M projects onto the span of the
    /// feature rows.
    pub fn seminorm(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for u in &self.basis {
            let c = dot(u, v);
            acc += c * c;
        }
        acc.sqrt()
    }
}

/// Spectrum of the n×d feature matrix via its SVD. The rank counts
/// singular values above `tol_factor · max`; `tol_factor` defaults to
/// `1e−9 · max(n, d)`.
pub fn design_rank(dataset: &LabeledDataset, tol_factor: Option<f64>) -> RankReport {
    let n = dataset.len();
    let d = dataset.dim();
    let tol = tol_factor.unwrap_or(1e-9 * n.max(d) as f64);

    let matrix = DMatrix::from_fn(n, d, |i, j| dataset.row(i)[j]);
    let svd = matrix.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values
        .iter()
        .filter(|&&s| s > tol * top && s > 0.0)
        .count();
    let basis = order[..rank]
        .iter()
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();

    RankReport {
        rank,
        singular_values,
        basis,
    }
}

/// One algorithm leg of the separation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dpsgd,
    DpsgdF,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dpsgd => "dpsgd",
            Algorithm::DpsgdF => "dpsgdf",
        }
    }
}

/// Hyperparameter grid scanned per algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationGrid {
    pub clip_norms: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub step_counts: Vec<usize>,
}

impl Default for SeparationGrid {
    fn default() -> Self {
        Self {
            clip_norms: vec![0.1, 1.0, 10.0],
            learning_rates: vec![0.0625, 0.25, 1.0],
            step_counts: vec![50, 200],
        }
    }
}

/// Monte-Carlo experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationConfig {
    pub mu: f64,
    pub n: usize,
    pub budget: PrivacyBudget,
    pub seeds: usize,
    pub grid: SeparationGrid,
    /// Batch size for both algorithms; defaults to n (one full pass).
    pub batch_size: Option<usize>,
    /// Run the preprocessed trainer with its mean step at the zero-noise
    /// limit (ablation; not private).
    pub oracle_mean: bool,
}

impl SeparationConfig {
    pub fn new(mu: f64, n: usize, budget: PrivacyBudget, seeds: usize) -> Self {
        Self {
            mu,
            n,
            budget,
            seeds,
            grid: SeparationGrid::default(),
            batch_size: None,
            oracle_mean: false,
        }
    }
}

/// Mean/std excess loss of one (algorithm, grid point, variant) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationRow {
    pub algorithm: Algorithm,
    pub variant: CounterexampleVariant,
    pub clip_norm: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed_count: usize,
    pub mean_excess: f64,
    pub std_excess: f64,
}

/// Best-of-grid summary for one algorithm: the grid point minimizing the
/// worse of the two variants' mean excess losses.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationBest {
    pub algorithm: Algorithm,
    pub clip_norm: f64,
    pub learning_rate: f64,
    pub steps: usize,
    /// max over the two variants of the mean excess loss.
    pub worst_variant_excess: f64,
    /// mean excess per variant at that grid point (standard, flipped).
    pub per_variant: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub rows: Vec<SeparationRow>,
    pub best_dpsgd: SeparationBest,
    pub best_dpsgdf: SeparationBest,
    /// Every preprocessed run kept its composition within the input budget.
    pub budget_sound: bool,
}

impl SeparationReport {
    /// Gap between the plain trainer's best score and the preprocessed
    /// trainer's best score (positive means preprocessing wins).
    pub fn gap(&self) -> f64 {
        self.best_dpsgd.worst_variant_excess - self.best_dpsgdf.worst_variant_excess
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "algorithm,variant,clip,lr,steps,seed_count,mean_excess,std_excess\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.algorithm.name(),
                r.variant.name(),
                r.clip_norm,
                r.learning_rate,
                r.steps,
                r.seed_count,
                r.mean_excess,
                r.std_excess
            ));
        }
        out
    }
}

fn excess_for_seed(
    algorithm: Algorithm,
    dataset: &LabeledDataset,
    config: &SeparationConfig,
    clip_norm: f64,
    learning_rate: f64,
    steps: usize,
    seed: u64,
) -> Result<(f64, bool)> {
    let hinge = LossSpec::hinge();
    let batch = config.batch_size.unwrap_or(config.n);
    let mut train = TrainConfig::new(steps, learning_rate, clip_norm, batch, seed);
    train.init = Init::Zero;
    match algorithm {
        Algorithm::Dpsgd => {
            // bias-free two-parameter model
            train.use_bias = false;
            let (model, _) = dpsgd_train(dataset, &hinge, &train, Some(&config.budget))?;
            Ok((excess_loss(&model, dataset, &hinge, 0.0)?, true))
        }
        Algorithm::DpsgdF => {
            let mut cfg = DpsgdfConfig::new(train);
            cfg.preprocess = PreprocessConfig {
                feature_norm: dataset.radius(),
                mean_mode: if config.oracle_mean {
                    MeanMode::Oracle
                } else {
                    MeanMode::Private
                },
                ..Default::default()
            };
            let outcome = dpsgdf_train(dataset, &hinge, &cfg, &config.budget)?;
            Ok((
                excess_loss(&outcome.model, dataset, &hinge, 0.0)?,
                outcome.split.is_sound(),
            ))
        }
    }
}

/// For each algorithm and grid point, the mean excess loss over seeds on
/// each label variant; an algorithm's score at a point is the worse
/// variant, and its best is the minimum over the grid.
pub fn separation_experiment(config: &SeparationConfig) -> Result<SeparationReport> {
    if config.seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let variants = [
        CounterexampleVariant::Standard,
        CounterexampleVariant::LabelFlipped,
    ];
    let datasets: Vec<LabeledDataset> = variants
        .iter()
        .map(|&variant| {
            make_counterexample(&CounterexampleSpec {
                mu: config.mu,
                n: config.n,
                variant,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut best: [Option<SeparationBest>; 2] = [None, None];
    let mut budget_sound = true;

    for (ai, &algorithm) in [Algorithm::Dpsgd, Algorithm::DpsgdF].iter().enumerate() {
        for &clip_norm in &config.grid.clip_norms {
            for &learning_rate in &config.grid.learning_rates {
                for &steps in &config.grid.step_counts {
                    let mut per_variant = [0.0f64; 2];
                    for (vi, dataset) in datasets.iter().enumerate() {
                        let results: Vec<(f64, bool)> = (0..config.seeds)
                            .into_par_iter()
                            .map(|seed| {
                                excess_for_seed(
                                    algorithm,
                                    dataset,
                                    config,
                                    clip_norm,
                                    learning_rate,
                                    steps,
                                    seed as u64,
                                )
                            })
                            .collect::<Result<_>>()?;
                        let k = results.len() as f64;
                        let mean = results.iter().map(|r| r.0).sum::<f64>() / k;
                        let var = results
                            .iter()
                            .map(|r| (r.0 - mean) * (r.0 - mean))
                            .sum::<f64>()
                            / (k - 1.0).max(1.0);
                        budget_sound &= results.iter().all(|r| r.1);
                        per_variant[vi] = mean;
                        rows.push(SeparationRow {
                            algorithm,
                            variant: variants[vi],
                            clip_norm,
                            learning_rate,
                            steps,
                            seed_count: config.seeds,
                            mean_excess: mean,
                            std_excess: var.sqrt(),
                        });
                    }
                    let worst = per_variant[0].max(per_variant[1]);
                    let better = match &best[ai] {
                        None => true,
                        Some(b) => worst < b.worst_variant_excess,
                    };
                    if better {
                        best[ai] = Some(SeparationBest {
                            algorithm,
                            clip_norm,
                            learning_rate,
                            steps,
                            worst_variant_excess: worst,
                            per_variant,
                        });
                    }
                }
            }
        }
    }

    let [best_dpsgd, best_dpsgdf] = best;
    Ok(SeparationReport {
        rows,
        best_dpsgd: best_dpsgd.expect("non-empty grid"),
        best_dpsgdf: best_dpsgdf.expect("non-empty grid"),
        budget_sound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn instance_layout_matches_the_construction() {
        let ds = make_counterexample(&CounterexampleSpec {
            mu: 2.0,
            n: 4,
            variant: CounterexampleVariant::Standard,
        })
        .unwrap();
        assert_eq!(ds.row(0), &[2.0, 1.0]);
        assert_eq!(ds.row(1), &[2.0, 1.0]);
        assert_eq!(ds.row(2), &[2.0, -1.0]);
        assert_eq!(ds.row(3), &[2.0, -1.0]);
        assert_eq!(ds.binary_label(0).unwrap(), 1.0);
        assert_eq!(ds.binary_label(2).unwrap(), -1.0);
    }

    #[test]
    fn flipped_variant_negates_labels() {
        let spec = CounterexampleSpec {
            mu: 3.0,
            n: 6,
            variant: CounterexampleVariant::Standard,
        };
        let a = make_counterexample(&spec).unwrap();
        let b = make_counterexample(&CounterexampleSpec {
            variant: CounterexampleVariant::LabelFlipped,
            ..spec
        })
        .unwrap();
        for i in 0..6 {
            assert_eq!(a.row(i), b.row(i));
            assert_eq!(a.binary_label(i).unwrap(), -b.binary_label(i).unwrap());
        }
    }

    #[test]
    fn instance_diameter_is_two_for_any_mu() {
        for mu in [0.5, 2.0, 100.0, 1e6] {
            let ds = make_counterexample(&CounterexampleSpec {
                mu,
                n: 4,
                variant: CounterexampleVariant::Standard,
            })
            .unwrap();
            assert!((ds.diameter() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn odd_n_is_rejected() {
        assert!(make_counterexample(&CounterexampleSpec {
            mu: 1.0,
            n: 5,
            variant: CounterexampleVariant::Standard,
        })
        .is_err());
    }

    #[test]
    fn excess_loss_examples() {
        let ds = make_counterexample(&CounterexampleSpec {
            mu: 2.0,
            n: 4,
            variant: CounterexampleVariant::Standard,
        })
        .unwrap();
        let hinge = LossSpec::hinge();
        let sep = LinearModel::new(vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(excess_loss(&sep, &ds, &hinge, 0.0).unwrap(), 0.0);
        let zero = LinearModel::zeros(2);
        assert_eq!(excess_loss(&zero, &ds, &hinge, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn excess_floor_respects_lower_bound_on_random_models() {
        let ds = make_counterexample(&CounterexampleSpec {
            mu: 7.0,
            n: 8,
            variant: CounterexampleVariant::Standard,
        })
        .unwrap();
        let hinge = LossSpec::hinge();
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        for _ in 0..1000 {
            let w = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let m = LinearModel::new(w.clone(), 0.0).unwrap();
            let e = excess_loss(&m, &ds, &hinge, 0.0).unwrap();
            assert!(e >= (1.0 - w[1]).max(0.0) - 1e-12);
        }
    }

    #[test]
    fn flipped_lower_bound_mirrors_in_w2() {
        let ds = make_counterexample(&CounterexampleSpec {
            mu: 7.0,
            n: 8,
            variant: CounterexampleVariant::LabelFlipped,
        })
        .unwrap();
        let hinge = LossSpec::hinge();
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        for _ in 0..1000 {
            let w = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let m = LinearModel::new(w.clone(), 0.0).unwrap();
            let l = empirical_loss(&m, &ds, &hinge).unwrap();
            assert!(l >= (1.0 + w[1]).max(0.0) - 1e-12);
        }
    }

    #[test]
    fn rank_of_identical_rows_is_one() {
        let ds = LabeledDataset::from_rows(
            vec![vec![1.0, 2.0, -1.0]; 6],
            Labels::Binary(vec![1, -1, 1, -1, 1, -1]),
        )
        .unwrap();
        assert_eq!(design_rank(&ds, None).rank, 1);
    }

    #[test]
    fn rank_of_the_instance_is_two() {
        let ds = make_counterexample(&CounterexampleSpec {
            mu: 5.0,
            n: 10,
            variant: CounterexampleVariant::Standard,
        })
        .unwrap();
        assert_eq!(design_rank(&ds, None).rank, 2);
    }

    #[test]
    fn gaussian_matrices_have_full_rank_matching_svd_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        for _ in 0..20 {
            let d = rng.random_range(1..8usize);
            let n = d + rng.random_range(0..8usize);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            rng.sample::<f64, _>(rand_distr::StandardNormal)
                        })
                        .collect()
                })
                .collect();
            let ds = LabeledDataset::from_rows(
                rows.clone(),
                Labels::Binary((0..n).map(|_| 1).collect()),
            )
            .unwrap();
            let report = design_rank(&ds, None);
            assert_eq!(report.rank, d);

            // independent route: eigenvalues of the d×d Gram matrix
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let m = DMatrix::from_row_slice(n, d, &flat);
            let gram = m.transpose() * &m;
            let mut sv: Vec<f64> = gram
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|&l| l.max(0.0).sqrt())
                .collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            let top = sv[0];
            let oracle_rank = sv.iter().filter(|&&s| s > 1e-9 * n.max(d) as f64 * top).count();
            assert_eq!(report.rank, oracle_rank);
            for (a, b) in report.singular_values.iter().zip(&sv) {
                assert!((a - b).abs() <= 1e-8 * top.max(1.0));
            }
        }
    }

    #[test]
    fn rank_invariant_to_permutation_and_duplication() {
        let mut rng = ChaCha12Rng::seed_from_u64(67);
        for _ in 0..20 {
            let d = rng.random_range(1..6usize);
            let n = rng.random_range(2..10usize);
            let mut rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let labels = |k: usize| Labels::Binary((0..k).map(|_| 1).collect());
            let base = design_rank(
                &LabeledDataset::from_rows(rows.clone(), labels(n)).unwrap(),
                None,
            )
            .rank;

            rows.reverse();
            let permuted = design_rank(
                &LabeledDataset::from_rows(rows.clone(), labels(n)).unwrap(),
                None,
            )
            .rank;
            assert_eq!(base, permuted);

            rows.push(rows[0].clone());
            let duplicated = design_rank(
                &LabeledDataset::from_rows(rows, labels(n + 1)).unwrap(),
                None,
            )
            .rank;
            assert_eq!(base, duplicated);
        }
    }

    #[test]
    fn seminorm_is_dominated_by_the_norm_and_tight_on_the_span() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        for _ in 0..50 {
            let d = rng.random_range(2..7usize);
            let n = rng.random_range(1..d); // rank-deficient on purpose
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let ds = LabeledDataset::from_rows(
                rows.clone(),
                Labels::Binary((0..n).map(|_| 1).collect()),
            )
            .unwrap();
            let report = design_rank(&ds, None);

            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let norm = crate::numeric::l2_norm(&v);
            assert!(report.seminorm(&v) <= norm * (1.0 + 1e-10));

            // a vector in the row span has seminorm equal to its norm
            let in_span = rows[0].clone();
            let sn = report.seminorm(&in_span);
            let n0 = crate::numeric::l2_norm(&in_span);
            assert!((sn - n0).abs() <= 1e-9 * n0.max(1.0));
        }
    }

    #[test]
    fn tiny_separation_smoke_run() {
        let budget = PrivacyBudget::non_private();
        let mut config = SeparationConfig::new(2.0, 8, budget, 2);
        config.grid = SeparationGrid {
            clip_norms: vec![10.0],
            learning_rates: vec![1.0],
            step_counts: vec![30],
        };
        let report = separation_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.budget_sound);
        // zero noise on separable data: both legs essentially solve it
        assert!(report.best_dpsgd.worst_variant_excess <= 1e-3);
        assert!(report.best_dpsgdf.worst_variant_excess <= 1e-3);
    }
}
