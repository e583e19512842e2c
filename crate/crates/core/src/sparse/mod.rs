//! Sparse kernels, randomized truncated SVD and dense reference solvers.

mod csr;
pub mod dense;
mod svd;

pub use csr::SparseCsr;
pub use dense::{
    dense_inverse_solve, dense_singular_values, power_iteration_solve, truncated_series,
    EdgeOperator, FactoredTransition, FixedPoint,
};
pub use svd::{truncated_svd, SvdFactors, SvdOptions, RESIDUAL_TOLERANCE};
