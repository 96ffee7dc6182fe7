//! Small dense-vector helpers shared across the crate.

use crate::error::{Error, Result};

/// Dot product, accumulated left to right.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Euclidean norm, accumulated left to right.
pub fn l2_norm(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in v {
        acc += x * x;
    }
    acc.sqrt()
}

/// Euclidean distance between two vectors of equal length.
pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

/// Scaling factor `min{1, c/norm}` applied by [`clip`]. A zero norm maps to 1.
///
/// Norms within `c·(1 + 4ε)` count as already clipped; without that band a
/// vector whose rescaled norm lands one ulp above `c` would be rescaled again
/// on a second pass, breaking exact idempotence.
pub fn clip_scale(norm: f64, c: f64) -> f64 {
    if norm > c * (1.0 + 4.0 * f64::EPSILON) {
        c / norm
    } else {
        1.0
    }
}

/// Norm clipping: `min{1, c/‖x‖₂}·x`.
///
/// The zero vector is returned unchanged; the direction of a nonzero input
/// is preserved. Rejects non-finite inputs and non-positive `c`.
pub fn clip(x: &[f64], c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clip norm must be positive, got {c}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clip input".into()));
    }
    let scale = clip_scale(l2_norm(x), c);
    Ok(x.iter().map(|v| v * scale).collect())
}

/// In-place variant of [`clip`] for pre-validated data on hot paths.
pub fn clip_in_place(x: &mut [f64], c: f64) {
    let scale = clip_scale(l2_norm(x), c);
    if scale != 1.0 {
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
}
