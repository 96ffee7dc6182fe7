//! Private quantile selection via the exponential mechanism over a uniform
//! candidate grid.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanisms::budget::PrivacyBudget;
use crate::mechanisms::stream::RandomStream;

/// Default number of grid candidates.
pub const DEFAULT_GRID_SIZE: usize = 1024;

/// Default target rank `n − ceil((100/ε)·ln n)`, clamped to `[1, n]`.
/// Infinite ε targets the maximum.
pub fn default_target_rank(n: usize, epsilon: f64) -> usize {
    if epsilon.is_infinite() {
        return n;
    }
    let allowance = ((100.0 / epsilon) * (n as f64).ln()).ceil();
    let rank = n as f64 - allowance;
    rank.max(1.0).min(n as f64) as usize
}

/// Draw a threshold τ from the exponential mechanism over `grid_size`
/// candidates uniformly spanning `[0, range_r]`, with utility
/// `u(t) = −|#{v ≤ t} − target_rank|` (sensitivity 1).
///
/// Infinite ε degenerates to the maximum-utility candidate, ties broken by
/// smallest index. The output always lies on the grid. Only ε of the budget
/// part is consumed; the mechanism is (ε, 0)-DP.
pub fn private_quantile(
    values: &[f64],
    target_rank: usize,
    budget: &PrivacyBudget,
    range_r: f64,
    grid_size: usize,
    stream: &RandomStream,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if target_rank < 1 || target_rank > values.len() {
        return Err(Error::InvalidParameter(format!(
            "target rank {target_rank} out of range 1..={}",
            values.len()
        )));
    }
    if !(range_r > 0.0) || !range_r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "range must be a positive real, got {range_r}"
        )));
    }
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid must have at least 2 candidates".into()));
    }
    let slack = range_r * 1e-9;
    if let Some(bad) = values.iter().find(|&&v| !(-slack..=range_r + slack).contains(&v)) {
        return Err(Error::InvalidParameter(format!(
            "value {bad} outside [0, {range_r}]"
        )));
    }
    if !(budget.epsilon > 0.0) {
        return Err(Error::Budget(format!(
            "epsilon must be positive, got {}",
            budget.epsilon
        )));
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count_at_most = |t: f64| sorted.partition_point(|&v| v <= t);

    let step = range_r / (grid_size - 1) as f64;
    let candidate = |j: usize| step * j as f64;
    let utilities: Vec<f64> = (0..grid_size)
        .map(|j| -((count_at_most(candidate(j)) as f64 - target_rank as f64).abs()))
        .collect();

    // zero-noise limit: argmax utility, smallest index on ties
    if budget.epsilon.is_infinite() {
        let mut best = 0usize;
        for (j, &u) in utilities.iter().enumerate().skip(1) {
            if u > utilities[best] {
                best = j;
            }
        }
        return Ok(candidate(best));
    }

    // exponential mechanism: P(j) ∝ exp(ε·u_j / 2), max-shifted for stability
    let u_max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities
        .iter()
        .map(|&u| (budget.epsilon * (u - u_max) / 2.0).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut rng = stream.rng();
    let mut pick = rng.random_range(0.0..total);
    for (j, &w) in weights.iter().enumerate() {
        if pick < w {
            return Ok(candidate(j));
        }
        pick -= w;
    }
    Ok(candidate(grid_size - 1))
}
