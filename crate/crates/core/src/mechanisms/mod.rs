//! Privacy mechanisms: budgets and composition, seeded random streams,
//! Gaussian noise calibration, and an exponential-mechanism quantile.

mod budget;
mod calibrate;
mod quantile;
mod stream;

pub use budget::{split_budget, BudgetSplit, PrivacyBudget};
pub use calibrate::{dpsgd_sigma, gaussian_noise, min_batch_size};
pub use quantile::{default_target_rank, private_quantile, DEFAULT_GRID_SIZE};
pub use stream::RandomStream;
