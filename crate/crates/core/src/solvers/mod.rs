//! The estimator family: least squares, sum-of-norms (and its reweighted and ℓ1
//! variants), outlier-aware least squares with group or log penalties, scalar Huber,
//! and the correlated-noise versions.

mod admm;
mod bcd;
mod colored;
mod huber;
mod ls;
mod polish;
mod prox;

pub use admm::{log_surrogate, solve_l1, solve_p1, solve_p2, BlockWeights};
pub use bcd::{p3_cost, p4_cost, solve_huber_scalar, solve_p3, solve_p3_path, solve_p4};
pub use colored::{solve_p3_colored, solve_p4_colored, INNER_TOLERANCE};
pub use huber::{huber_rho, vector_huber_cost};
pub use ls::{ls_cost, solve_ga_ls, solve_ls};
pub use prox::{block_soft_threshold, block_soft_threshold_into};
