//! Datasets: dense feature rows with binary or multiclass labels.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::l2_norm;

/// Label storage. Binary labels live in `{-1, +1}`, multiclass labels in
/// `{0..classes-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Labels {
    Binary(Vec<i8>),
    Multiclass { classes: usize, values: Vec<u32> },
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Binary(v) => v.len(),
            Labels::Multiclass { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An immutable matrix of feature rows plus labels.
///
/// `radius` is an upper bound on the row ℓ2 norms; when not supplied it is
/// computed from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>, // row-major, n × d
    n: usize,
    d: usize,
    labels: Labels,
    radius: f64,
}

impl LabeledDataset {
    /// Build a dataset from feature rows, validating finiteness, shape, and
    /// label domains. The radius bound is taken from the data.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Labels) -> Result<Self> {
        Self::build(rows, labels, None)
    }

    /// Like [`from_rows`](Self::from_rows) but with an explicit radius bound,
    /// validated against every row.
    pub fn with_radius(rows: Vec<Vec<f64>>, labels: Labels, radius: f64) -> Result<Self> {
        Self::build(rows, labels, Some(radius))
    }

    fn build(rows: Vec<Vec<f64>>, labels: Labels, radius: Option<f64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidParameter("zero-dimensional features".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        match &labels {
            Labels::Binary(v) => {
                if let Some(bad) = v.iter().find(|&&y| y != 1 && y != -1) {
                    return Err(Error::LabelDomain(format!(
                        "binary labels must be ±1, got {bad}"
                    )));
                }
            }
            Labels::Multiclass { classes, values } => {
                if *classes == 0 {
                    return Err(Error::LabelDomain("zero classes".into()));
                }
                if let Some(bad) = values.iter().find(|&&y| y as usize >= *classes) {
                    return Err(Error::LabelDomain(format!(
                        "class index {bad} out of range 0..{classes}"
                    )));
                }
            }
        }
        if let Some(r) = radius {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "radius bound must be a nonnegative real, got {r}"
                )));
            }
        }

        let mut features = Vec::with_capacity(n * d);
        let mut max_norm = 0.0f64;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature row {i}")));
            }
            let norm = l2_norm(row);
            if let Some(r) = radius {
                if norm > r * (1.0 + 4.0 * f64::EPSILON) {
                    return Err(Error::InvalidParameter(format!(
                        "row {i} has norm {norm} above the declared radius {r}"
                    )));
                }
            }
            max_norm = max_norm.max(norm);
            features.extend_from_slice(row);
        }

        Ok(Self {
            features,
            n,
            d,
            labels,
            radius: radius.unwrap_or(max_norm),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    /// Upper bound on the row ℓ2 norms.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Binary label of row `i` as ±1.0. Errors if the dataset is multiclass.
    pub fn binary_label(&self, i: usize) -> Result<f64> {
        match &self.labels {
            Labels::Binary(v) => Ok(f64::from(v[i])),
            Labels::Multiclass { .. } => Err(Error::LabelDomain(
                "expected binary labels, dataset is multiclass".into(),
            )),
        }
    }

    /// Class index of row `i`. Errors if the dataset is binary.
    pub fn class_label(&self, i: usize) -> Result<usize> {
        match &self.labels {
            Labels::Multiclass { values, .. } => Ok(values[i] as usize),
            Labels::Binary(_) => Err(Error::LabelDomain(
                "expected multiclass labels, dataset is binary".into(),
            )),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match &self.labels {
            Labels::Multiclass { classes, .. } => Some(*classes),
            Labels::Binary(_) => None,
        }
    }

    /// A copy with every row scaled to ℓ2 norm exactly `r` (zero rows left
    /// at zero). Labels are unchanged.
    pub fn normalized_rows(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "row norm must be a positive real, got {r}"
            )));
        }
        let rows: Vec<Vec<f64>> = self
            .rows()
            .map(|row| {
                let norm = l2_norm(row);
                if norm > 0.0 {
                    let s = r / norm;
                    row.iter().map(|v| s * v).collect()
                } else {
                    row.to_vec()
                }
            })
            .collect();
        Self::with_radius(rows, self.labels.clone(), r)
    }

    /// Maximum pairwise ℓ2 distance between feature rows. Quadratic in `n`;
    /// intended for desk-scale diagnostics.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                best = best.max(crate::numeric::l2_dist(self.row(i), self.row(j)));
            }
        }
        best
    }

    /// Order-sensitive content hash of shapes, features, and labels.
    /// Permuting rows changes the fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"dplinear.dataset.v1");
        h.update((self.n as u64).to_le_bytes());
        h.update((self.d as u64).to_le_bytes());
        for v in &self.features {
            h.update(v.to_le_bytes());
        }
        match &self.labels {
            Labels::Binary(v) => {
                h.update(b"binary");
                for y in v {
                    h.update(y.to_le_bytes());
                }
            }
            Labels::Multiclass { classes, values } => {
                h.update(b"multiclass");
                h.update((*classes as u64).to_le_bytes());
                for y in values {
                    h.update(y.to_le_bytes());
                }
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(rows: Vec<Vec<f64>>, ys: Vec<i8>) -> LabeledDataset {
        LabeledDataset::from_rows(rows, Labels::Binary(ys)).unwrap()
    }

    #[test]
    fn builds_and_exposes_shape() {
        let ds = binary(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![1, -1]);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert!((ds.radius() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(
            LabeledDataset::from_rows(vec![], Labels::Binary(vec![])),
            Err(Error::EmptyDataset)
        ));
        assert!(LabeledDataset::from_rows(
            vec![vec![1.0], vec![1.0, 2.0]],
            Labels::Binary(vec![1, -1])
        )
        .is_err());
    }

    #[test]
    fn rejects_bad_labels_and_non_finite() {
        assert!(LabeledDataset::from_rows(vec![vec![1.0]], Labels::Binary(vec![0])).is_err());
        assert!(LabeledDataset::from_rows(
            vec![vec![1.0]],
            Labels::Multiclass {
                classes: 3,
                values: vec![3],
            }
        )
        .is_err());
        assert!(
            LabeledDataset::from_rows(vec![vec![f64::NAN]], Labels::Binary(vec![1])).is_err()
        );
    }

    #[test]
    fn radius_bound_is_validated() {
        assert!(
            LabeledDataset::with_radius(vec![vec![3.0, 4.0]], Labels::Binary(vec![1]), 4.0)
                .is_err()
        );
        let ds =
            LabeledDataset::with_radius(vec![vec![3.0, 4.0]], Labels::Binary(vec![1]), 6.0)
                .unwrap();
        assert_eq!(ds.radius(), 6.0);
    }

    #[test]
    fn fingerprint_is_order_sensitive() {
        let a = binary(vec![vec![1.0], vec![2.0]], vec![1, -1]);
        let b = binary(vec![vec![2.0], vec![1.0]], vec![-1, 1]);
        assert_ne!(a.fingerprint(), b.fingerprint());
        let c = binary(vec![vec![1.0], vec![2.0]], vec![1, -1]);
        assert_eq!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn diameter_of_two_points() {
        let ds = binary(vec![vec![0.0, 0.0], vec![3.0, 4.0]], vec![1, -1]);
        assert!((ds.diameter() - 5.0).abs() < 1e-12);
    }
}
