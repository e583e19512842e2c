//! Edge representation learning on edge-attributed bipartite graphs.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every numerical piece
//! of the pipeline:
//!
//! * [`graph`]: the graph model, incidence matrices and edge-wise transition
//!   matrices.
//! * [`sparse`]: CSR kernels, randomized truncated SVD and the dense reference
//!   solvers used to verify the factorized paths.
//! * [`propagate`]: factorized feature propagation (single and dual view).
//! * [`spectra`]: second singular value, mixing-time lower bound and the
//!   variance contraction diagnostic.
//! * [`model`]: feature transform, output head, loss, gradients, Adam and the
//!   training loop.
//! * [`metrics`]: AP / ROC-AUC and dataset splitting.
//! * [`datagen`]: synthetic graphs and BFS subgraph sampling.
//!
//! File formats and the command line live in the `eagle-cli` crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod error;
pub(crate) mod math;

pub mod datagen;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod propagate;
pub mod sparse;
pub mod spectra;

pub use error::{Error, Result};
pub use graph::{Eabg, IncidencePair};
pub use sparse::{SparseCsr, SvdFactors, SvdOptions};

/// Dense column-major matrix used throughout the crate.
pub type Mat = nalgebra::DMatrix<f64>;

/// Graphs above this many edges are refused by every routine that would
/// materialize an `|E| x |E|` matrix.
pub const DEFAULT_DENSE_EDGE_CAP: usize = 5_000;

/// `aᵀ·b`. nalgebra's own `tr_mul` bypasses the blocked GEMM kernel, which
/// is far slower at the sizes used here.
pub(crate) fn tr_mul(a: &Mat, b: &Mat) -> Mat {
    a.transpose() * b
}
