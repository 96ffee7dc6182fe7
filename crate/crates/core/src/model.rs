//! Linear models over the original feature space.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::numeric::dot;

/// Parameters θ = (w, b) of a linear scorer `w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(Self { w, b })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            w: vec![0.0; dim],
            b: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Score `w·x + b` of a feature vector.
pub fn margin_score(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.w.len() {
        return Err(Error::DimensionMismatch {
            expected: model.w.len(),
            got: x.len(),
        });
    }
    Ok(dot(&model.w, x) + model.b)
}

/// True iff the model assigns two scores with non-positive product somewhere
/// in the dataset, i.e. it does not push every point to the same side.
pub fn check_nontrivial(model: &LinearModel, dataset: &LabeledDataset) -> Result<bool> {
    let mut min_score = f64::INFINITY;
    let mut max_score = f64::NEG_INFINITY;
    for x in dataset.rows() {
        let s = margin_score(model, x)?;
        min_score = min_score.min(s);
        max_score = max_score.max(s);
    }
    Ok(min_score * max_score <= 0.0)
}

/// Fraction of correctly signed scores on a binary dataset. A score of
/// exactly zero counts as the positive class.
pub fn binary_accuracy(model: &LinearModel, dataset: &LabeledDataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..dataset.len() {
        let s = margin_score(model, dataset.row(i))?;
        let predicted = if s >= 0.0 { 1.0 } else { -1.0 };
        if predicted == dataset.binary_label(i)? {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// One scorer per class; prediction is the argmax score with ties broken
/// toward the lowest class index.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    weights: Vec<f64>, // classes × dim, row-major
    biases: Vec<f64>,
    classes: usize,
    dim: usize,
}

impl MulticlassModel {
    pub fn new(weights: Vec<f64>, biases: Vec<f64>, classes: usize, dim: usize) -> Result<Self> {
        if weights.len() != classes * dim || biases.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes * dim,
                got: weights.len(),
            });
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(Self {
            weights,
            biases,
            classes,
            dim,
        })
    }

    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: vec![0.0; classes * dim],
            biases: vec![0.0; classes],
            classes,
            dim,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_weights(&self, k: usize) -> &[f64] {
        &self.weights[k * self.dim..(k + 1) * self.dim]
    }

    pub fn class_bias(&self, k: usize) -> f64 {
        self.biases[k]
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((0..self.classes)
            .map(|k| dot(self.class_weights(k), x) + self.biases[k])
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let scores = self.scores(x)?;
        let mut best = 0usize;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        Ok(best)
    }
}

/// Fraction of correct argmax predictions on a multiclass dataset.
pub fn multiclass_accuracy(model: &MulticlassModel, dataset: &LabeledDataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..dataset.len() {
        if model.predict(dataset.row(i))? == dataset.class_label(i)? {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}
