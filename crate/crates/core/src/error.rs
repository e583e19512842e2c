use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("degenerate graph: {side}-node {node} has no incident edge")]
    DegenerateGraph { side: char, node: usize },
    #[error("rank {k} out of range (must be in 1..={max})")]
    RankOutOfRange { k: usize, max: usize },
    #[error("matrix has no nonzero entry")]
    ZeroMatrix,
    #[error("dense materialization of {edges} edges exceeds the cap of {cap}")]
    DenseCapExceeded { edges: usize, cap: usize },
    #[error("linear system is singular")]
    Singular,
    #[error("no convergence after {iters} iterations (last update {update:e})")]
    NotConverged { iters: usize, update: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("label mask is empty")]
    EmptyMask,
    #[error("labels need at least one positive and one negative")]
    DegenerateLabels,
    #[error("too few labeled edges: {found} (need at least {required})")]
    TooFewEdges { found: usize, required: usize },
    #[error("infeasible generator request: {0}")]
    Infeasible(String),
}

impl Error {
    /// True for failures of an iterative or direct solver, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular | Error::NotConverged { .. })
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_shape(
    op: &'static str,
    expected: (usize, usize),
    found: (usize, usize),
) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            op,
            expected,
            found,
        })
    }
}
