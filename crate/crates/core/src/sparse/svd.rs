//! Randomized truncated SVD (range finder with subspace iteration).
//!
//! Only the left factor is produced: propagation needs `U` and `Σ` of the
//! normalized incidence matrix, never `V`.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SparseCsr;
use crate::error::{Error, Result};
use crate::math;
use crate::Mat;

/// Residual above which a factorization is flagged as unconverged.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(default)]
pub struct SvdOptions {
    pub seed: u64,
    /// Extra sample columns beyond `k`.
    pub oversample: usize,
    /// Number of `A Aᵀ` applications after the initial sketch.
    pub power_iters: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            oversample: 10,
            power_iters: 7,
        }
    }
}

impl SvdOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Leading left singular vectors and values of a sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `rows x k`, orthonormal columns.
    pub u: Mat,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// Largest `‖A Aᵀ u_j − σ_j² u_j‖₂` over the returned columns.
    pub max_residual: f64,
    /// False when `max_residual` exceeds [`RESIDUAL_TOLERANCE`].
    pub converged: bool,
}

impl SvdFactors {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }
}

/// Computes the top-`k` left singular pairs of `a`.
///
/// `k` may exceed the number of columns (up to the number of rows): the extra
/// columns of `u` then complete an orthonormal basis of the row space with
/// singular value zero. When `k + oversample` reaches the row count the
/// factorization is exact up to the dense eigensolver and does not use the
/// random sketch at all.
pub fn truncated_svd(a: &SparseCsr, k: usize, opts: &SvdOptions) -> Result<SvdFactors> {
    let m = a.nrows();
    if k == 0 || k > m {
        return Err(Error::RankOutOfRange { k, max: m });
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let width = (k + opts.oversample).min(m);
    let basis = if width == m {
        Mat::identity(m, m)
    } else {
        range_finder(a, width, opts)?
    };

    // basisᵀ A Aᵀ basis, the Gram matrix of A projected onto the sketch.
    let projected = a.spmm_t(&basis)?;
    let mut gram = crate::tr_mul(&projected, &projected);
    gram = (&gram + gram.transpose()) * 0.5;
    let eig = gram.symmetric_eigen();

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    order.truncate(k);

    let mut small = Mat::zeros(width, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        small.set_column(dst, &eig.eigenvectors.column(src));
        sigma.push(math::sqrt(eig.eigenvalues[src].max(0.0)));
    }
    let mut u = &basis * small;
    fix_signs(&mut u);

    let max_residual = residual(a, &u, &sigma)?;
    Ok(SvdFactors {
        u,
        sigma,
        max_residual,
        converged: max_residual <= RESIDUAL_TOLERANCE,
    })
}

fn range_finder(a: &SparseCsr, width: usize, opts: &SvdOptions) -> Result<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let test = Mat::from_fn(a.ncols(), width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(a.spmm(&test)?);
    for _ in 0..opts.power_iters {
        q = orthonormalize(a.gram_apply(&q)?);
    }
    Ok(q)
}

/// Householder QR; the thin `Q` is orthonormal even for rank-deficient input.
fn orthonormalize(y: Mat) -> Mat {
    y.qr().q()
}

/// Flips each column so that its largest-magnitude entry is positive.
pub(crate) fn fix_signs(u: &mut Mat) {
    for mut col in u.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn residual(a: &SparseCsr, u: &Mat, sigma: &[f64]) -> Result<f64> {
    let applied = a.gram_apply(u)?;
    let mut worst = 0.0f64;
    for (j, s) in sigma.iter().enumerate() {
        let r = applied.column(j) - u.column(j) * (s * s);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}
