//! (ε, δ) privacy budgets and their composition ledger.

use crate::error::{Error, Result};

/// An (ε, δ) differential-privacy budget. `epsilon` may be infinite, which
/// the mechanisms treat as their zero-noise limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Budget(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Budget(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    /// The zero-noise limit: infinite ε with a placeholder δ.
    pub fn non_private() -> Self {
        Self {
            epsilon: f64::INFINITY,
            delta: 0.5,
        }
    }

    pub fn is_non_private(&self) -> bool {
        self.epsilon.is_infinite()
    }
}

/// A split of a parent budget into parts under basic composition: the sums
/// of the parts' ε and δ must not exceed the parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSplit {
    total: PrivacyBudget,
    parts: Vec<PrivacyBudget>,
}

impl BudgetSplit {
    pub fn total(&self) -> PrivacyBudget {
        self.total
    }

    pub fn parts(&self) -> &[PrivacyBudget] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> PrivacyBudget {
        self.parts[i]
    }

    /// Basic-composition cost of the parts: (Σ εᵢ, Σ δᵢ).
    pub fn consumed(&self) -> (f64, f64) {
        let eps: f64 = self.parts.iter().map(|p| p.epsilon).sum();
        let delta: f64 = self.parts.iter().map(|p| p.delta).sum();
        (eps, delta)
    }

    /// Ledger soundness: parts stay within the parent budget, up to
    /// floating-point slack.
    pub fn is_sound(&self) -> bool {
        let (eps, delta) = self.consumed();
        eps <= self.total.epsilon + 1e-12 && delta <= self.total.delta + 1e-18
    }

    pub fn check_sound(&self) -> Result<()> {
        if self.is_sound() {
            Ok(())
        } else {
            let (eps, delta) = self.consumed();
            Err(Error::Budget(format!(
                "composition ({eps}, {delta}) exceeds the parent budget ({}, {})",
                self.total.epsilon, self.total.delta
            )))
        }
    }
}

/// Split a budget proportionally: part i gets (fᵢ·ε, fᵢ·δ). Fractions must
/// be positive and sum to 1 within 1e−12.
pub fn split_budget(total: PrivacyBudget, fractions: &[f64]) -> Result<BudgetSplit> {
    if fractions.is_empty() {
        return Err(Error::Budget("no fractions supplied".into()));
    }
    if let Some(bad) = fractions.iter().find(|&&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::Budget(format!("fractions must be positive reals, got {bad}")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Budget(format!("fractions must sum to 1, got {sum}")));
    }
    let mut parts: Vec<PrivacyBudget> = fractions
        .iter()
        .map(|&f| PrivacyBudget {
            epsilon: f * total.epsilon,
            delta: f * total.delta,
        })
        .collect();
    // the rounded products may overshoot the parent by a few ulps; shave
    // the last part so the ledger can never exceed the budget
    let last = parts.len() - 1;
    if total.epsilon.is_finite() {
        let head: f64 = parts[..last].iter().map(|p| p.epsilon).sum();
        parts[last].epsilon = parts[last].epsilon.min(total.epsilon - head);
    }
    let head: f64 = parts[..last].iter().map(|p| p.delta).sum();
    parts[last].delta = parts[last].delta.min(total.delta - head);

    let split = BudgetSplit { total, parts };
    debug_assert!(split.is_sound());
    Ok(split)
}
