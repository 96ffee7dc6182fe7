//! Noise calibration for clipped-gradient SGD and the Gaussian sampler.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mechanisms::budget::PrivacyBudget;
use crate::mechanisms::stream::RandomStream;

/// Per-example noise scale for the private SGD loop:
/// `σ = sqrt(8·T·C²·log(1/δ)) / (n·ε)`.
///
/// Infinite ε yields σ = 0, the zero-noise limit.
pub fn dpsgd_sigma(steps: usize, clip_norm: f64, n: usize, budget: &PrivacyBudget) -> Result<f64> {
    if steps == 0 || n == 0 {
        return Err(Error::InvalidParameter("steps and n must be positive".into()));
    }
    if !(clip_norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clip norm must be positive, got {clip_norm}"
        )));
    }
    if !(budget.epsilon > 0.0) || !(budget.delta > 0.0 && budget.delta < 1.0) {
        return Err(Error::Budget(format!(
            "need epsilon > 0 and delta in (0, 1), got ({}, {})",
            budget.epsilon, budget.delta
        )));
    }
    if budget.epsilon.is_infinite() {
        return Ok(0.0);
    }
    let t = steps as f64;
    let nn = n as f64;
    Ok((8.0 * t * clip_norm * clip_norm * (1.0 / budget.delta).ln()).sqrt()
        / (nn * budget.epsilon))
}

/// Smallest admissible batch size, `ceil(max{n·sqrt(ε/4T), 1})`.
///
/// The ceiling is taken with a tiny tolerance so values that are integers up
/// to rounding (e.g. `100·sqrt(1/100)`) are not bumped up a step. Saturates
/// to `usize::MAX` for infinite ε.
pub fn min_batch_size(n: usize, steps: usize, epsilon: f64) -> usize {
    let raw = n as f64 * (epsilon / (4.0 * steps as f64)).sqrt();
    let raw = raw.max(1.0);
    if !raw.is_finite() {
        return usize::MAX;
    }
    (raw - raw * 1e-12 - 1e-12).ceil() as usize
}

/// A vector of `dim` i.i.d. `N(0, σ²)` draws, deterministic in the stream
/// descriptor. σ = 0 returns the zero vector.
pub fn gaussian_noise(stream: &RandomStream, dim: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; dim];
    }
    let mut rng = stream.rng();
    (0..dim)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}
