//! Small dense real linear algebra and seeded random sampling.

mod matrix;
mod rng;
mod svd;

pub use matrix::Matrix;
pub use rng::{sample_gaussian, RngState};
pub use svd::{default_rank_tol, operator_norm, pinv, pinv_with_tol, svd, SvdResult};
