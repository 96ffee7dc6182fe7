//! Margin losses φ(y·h) with their subderivatives and Lipschitz constants.

use crate::error::{Error, Result};

/// A margin loss: the per-example loss is `phi(y·score)` with `phi` convex,
/// non-increasing, and finite at 0. `phi_prime` is a subderivative with
/// `|phi_prime| ≤ lipschitz` everywhere.
#[derive(Debug, Clone, Copy)]
pub struct LossSpec {
    name: &'static str,
    phi: fn(f64) -> f64,
    phi_prime: fn(f64) -> f64,
    lipschitz: f64,
    phi_at_zero: f64,
}

impl LossSpec {
    /// Hinge loss `[1 − z]₊`. The subgradient at the kink `z = 1` is 0
    /// (strict indicator `z < 1`).
    pub fn hinge() -> Self {
        Self {
            name: "hinge",
            phi: hinge_phi,
            phi_prime: hinge_phi_prime,
            lipschitz: 1.0,
            phi_at_zero: 1.0,
        }
    }

    /// Logistic loss `ln(1 + e^{−z})`.
    pub fn logistic() -> Self {
        Self {
            name: "logistic",
            phi: logistic_phi,
            phi_prime: logistic_phi_prime,
            lipschitz: 1.0,
            phi_at_zero: std::f64::consts::LN_2,
        }
    }

    /// A custom margin loss. Validates `lipschitz > 0` and `phi(0)` finite
    /// and nonnegative.
    pub fn custom(
        name: &'static str,
        phi: fn(f64) -> f64,
        phi_prime: fn(f64) -> f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lipschitz constant must be a positive real, got {lipschitz}"
            )));
        }
        let phi_at_zero = phi(0.0);
        if !phi_at_zero.is_finite() || phi_at_zero < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "phi(0) must be a finite nonnegative real, got {phi_at_zero}"
            )));
        }
        Ok(Self {
            name,
            phi,
            phi_prime,
            lipschitz,
            phi_at_zero,
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn phi(&self, z: f64) -> f64 {
        (self.phi)(z)
    }

    pub fn phi_prime(&self, z: f64) -> f64 {
        (self.phi_prime)(z)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn phi_at_zero(&self) -> f64 {
        self.phi_at_zero
    }
}

fn hinge_phi(z: f64) -> f64 {
    (1.0 - z).max(0.0)
}

fn hinge_phi_prime(z: f64) -> f64 {
    if z < 1.0 {
        -1.0
    } else {
        0.0
    }
}

fn logistic_phi(z: f64) -> f64 {
    // softplus(−z), split to avoid overflow on either tail
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

fn logistic_phi_prime(z: f64) -> f64 {
    // −1/(1 + e^z); e^z overflows to +inf for large z, giving the correct 0
    -1.0 / (1.0 + z.exp())
}
