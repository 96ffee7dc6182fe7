//! Per-example gradients and empirical risk for linear classifiers.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::model::{margin_score, LinearModel};
use crate::numeric::dot;

/// Gradient of `phi(y·(w·x + b))` with respect to (w, b), returned as a
/// vector of dimension d+1 with the bias derivative last:
/// `phi'(y·h)·y·(x, 1)`.
pub fn per_example_gradient(
    model: &LinearModel,
    x: &[f64],
    y: f64,
    loss: &LossSpec,
) -> Result<Vec<f64>> {
    if y != 1.0 && y != -1.0 {
        return Err(Error::LabelDomain(format!("binary label must be ±1, got {y}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature vector".into()));
    }
    let h = margin_score(model, x)?;
    let g = loss.phi_prime(y * h) * y;
    let mut out = Vec::with_capacity(x.len() + 1);
    out.extend(x.iter().map(|v| g * v));
    out.push(g);
    Ok(out)
}

/// Mean per-example loss over the dataset, accumulated in index order.
pub fn empirical_loss(
    model: &LinearModel,
    dataset: &LabeledDataset,
    loss: &LossSpec,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = 0.0;
    for i in 0..dataset.len() {
        let h = margin_score(model, dataset.row(i))?;
        acc += loss.phi(dataset.binary_label(i)? * h);
    }
    Ok(acc / dataset.len() as f64)
}

/// Log-sum-exp with the max-shift trick.
fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = scores.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}

/// Multinomial logistic loss `−ln softmax(scores)[y]` for one example.
pub fn softmax_example_loss(scores: &[f64], y: usize) -> f64 {
    log_sum_exp(scores) - scores[y]
}

/// Gradient of the multinomial logistic loss with respect to the flattened
/// parameter vector, laid out as `classes` blocks of `(x, 1)` (or `x` when
/// `bias` is false). Block k is scaled by `softmax(scores)_k − 1{k = y}`.
pub fn softmax_example_gradient(
    scores: &[f64],
    x: &[f64],
    y: usize,
    bias: bool,
    out: &mut [f64],
) {
    let lse = log_sum_exp(scores);
    let block = x.len() + usize::from(bias);
    debug_assert_eq!(out.len(), scores.len() * block);
    for (k, &s) in scores.iter().enumerate() {
        let mut p = (s - lse).exp();
        if k == y {
            p -= 1.0;
        }
        let dst = &mut out[k * block..(k + 1) * block];
        for (o, &v) in dst[..x.len()].iter_mut().zip(x) {
            *o = p * v;
        }
        if bias {
            dst[x.len()] = p;
        }
    }
}

/// Mean multinomial logistic loss of a flattened multiclass parameter
/// vector over a multiclass dataset.
pub fn softmax_empirical_loss(
    theta: &[f64],
    dataset: &LabeledDataset,
    classes: usize,
    bias: bool,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let block = dataset.dim() + usize::from(bias);
    if theta.len() != classes * block {
        return Err(Error::DimensionMismatch {
            expected: classes * block,
            got: theta.len(),
        });
    }
    let mut acc = 0.0;
    let mut scores = vec![0.0; classes];
    for i in 0..dataset.len() {
        let x = dataset.row(i);
        for (k, s) in scores.iter_mut().enumerate() {
            let blk = &theta[k * block..(k + 1) * block];
            *s = dot(&blk[..x.len()], x) + if bias { blk[x.len()] } else { 0.0 };
        }
        acc += softmax_example_loss(&scores, dataset.class_label(i)?);
    }
    Ok(acc / dataset.len() as f64)
}
