//! Dense reference solvers for the propagation operator
//! `(1−α) Σ_t αᵗ Pᵗ = (1−α)(I − αP)⁻¹`.
//!
//! These materialize `|E| x |E|` matrices and refuse anything above the dense
//! edge cap. They are the ground truth every factorized path is checked
//! against.

use alloc::vec::Vec;

use super::SparseCsr;
use crate::error::{check_shape, Error, Result};
use crate::{Mat, DEFAULT_DENSE_EDGE_CAP};

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::param("alpha", "must lie in [0, 1)"))
    }
}

pub(crate) fn check_cap(n: usize) -> Result<()> {
    if n > DEFAULT_DENSE_EDGE_CAP {
        Err(Error::DenseCapExceeded {
            edges: n,
            cap: DEFAULT_DENSE_EDGE_CAP,
        })
    } else {
        Ok(())
    }
}

fn check_square_rhs(op: &'static str, p: &Mat, rhs: &Mat) -> Result<()> {
    let n = p.nrows();
    check_shape(op, (n, n), p.shape())?;
    check_shape(op, (n, rhs.ncols()), rhs.shape())?;
    check_cap(n)
}

/// Exact closed form `(1−α)(I − αP)⁻¹ · rhs` via LU.
pub fn dense_inverse_solve(p: &Mat, alpha: f64, rhs: &Mat) -> Result<Mat> {
    check_square_rhs("dense_inverse_solve", p, rhs)?;
    check_alpha(alpha)?;
    let n = p.nrows();
    let system = Mat::identity(n, n) - p * alpha;
    let sol = system.lu().solve(rhs).ok_or(Error::Singular)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(sol * (1.0 - alpha))
}

/// Partial sum `(1−α) Σ_{t=0..=t_max} αᵗ Pᵗ · rhs`.
pub fn truncated_series(p: &Mat, alpha: f64, rhs: &Mat, t_max: usize) -> Result<Mat> {
    check_square_rhs("truncated_series", p, rhs)?;
    check_alpha(alpha)?;
    let mut term = rhs.clone();
    let mut acc = rhs.clone();
    for _ in 0..t_max {
        term = (p * term) * alpha;
        acc += &term;
    }
    Ok(acc * (1.0 - alpha))
}

/// A square linear operator on edge signals, applied column-wise.
pub trait EdgeOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Mat) -> Result<Mat>;
}

impl EdgeOperator for Mat {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &Mat) -> Result<Mat> {
        check_shape("apply", (self.ncols(), x.ncols()), x.shape())?;
        Ok(self * x)
    }
}

/// `P = B Bᵀ` applied as two sparse products, never materialized.
#[derive(Debug, Clone, Copy)]
pub struct FactoredTransition<'a> {
    pub incidence: &'a SparseCsr,
}

impl EdgeOperator for FactoredTransition<'_> {
    fn dim(&self) -> usize {
        self.incidence.nrows()
    }

    fn apply(&self, x: &Mat) -> Result<Mat> {
        self.incidence.gram_apply(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub z: Mat,
    pub iterations: usize,
}

/// Iterates `Z ← (1−α)·rhs + α·P·Z` from `Z = rhs` until the largest absolute
/// update drops below `tol`.
pub fn power_iteration_solve<O: EdgeOperator + ?Sized>(
    op: &O,
    alpha: f64,
    rhs: &Mat,
    tol: f64,
    max_iters: usize,
) -> Result<FixedPoint> {
    check_alpha(alpha)?;
    check_shape("power_iteration_solve", (op.dim(), rhs.ncols()), rhs.shape())?;
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let base = rhs * (1.0 - alpha);
    let mut z = rhs.clone();
    let mut update = f64::INFINITY;
    for it in 1..=max_iters {
        let next = &base + op.apply(&z)? * alpha;
        update = (&next - &z).amax();
        z = next;
        if update < tol {
            return Ok(FixedPoint { z, iterations: it });
        }
    }
    Err(Error::NotConverged {
        iters: max_iters,
        update,
    })
}

/// All singular values of `a`, descending, from a dense Golub–Kahan SVD.
pub fn dense_singular_values(a: &SparseCsr) -> Result<Vec<f64>> {
    check_cap(a.nrows())?;
    let svd = a.to_dense().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    Ok(s)
}
