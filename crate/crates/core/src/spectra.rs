//! Spectral diagnostics of the edge-wise transition matrix.
//!
//! The eigenvalues of `P = B Bᵀ` are the squared singular values of `B`, so
//! the second singular value `σ₂` controls how fast `Pᵗ` forgets its input:
//! the mixing time is at least `1/(1−σ₂²) − 1`, and the variance of `Pᵗf`
//! around its stationary mean shrinks by at most `σ₂⁴ᵗ`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::graph::{build_incidence, Eabg};
use crate::propagate::{check_alpha, MIN_DENOMINATOR};
use crate::sparse::dense::check_cap;
use crate::math;
use crate::sparse::{truncated_svd, SparseCsr, SvdOptions};
use crate::{Mat, DEFAULT_DENSE_EDGE_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub sigma2: f64,
    pub sigma2_sq: f64,
    /// `1/(1−σ₂²)`; infinite when the edge graph is disconnected.
    #[serde(with = "inf_as_string")]
    pub inv_spectral_gap: f64,
    /// `1/(1−σ₂²) − 1`.
    #[serde(with = "inf_as_string")]
    pub mix_lower_bound: f64,
    pub sigma_k: f64,
    /// `1/(1−ασ_k²)`.
    pub theorem1_bound: f64,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// False only when a truncated SVD was needed and missed its residual
    /// tolerance.
    pub svd_converged: bool,
}

/// Computes the report from the singular values of the combined incidence
/// `B` (edges × nodes). When the node count is within the dense cap they come
/// from the eigenvalues of the small Gram matrix `BᵀB`, which shares its
/// nonzero spectrum with `P`; otherwise from a rank-`k` truncated SVD.
///
/// With a single edge only one singular value exists and `σ₂` is taken as 0.
pub fn spectral_report(
    g: &Eabg,
    alpha: f64,
    beta: f64,
    k: usize,
    opts: &SvdOptions,
) -> Result<SpectralReport> {
    check_alpha(alpha)?;
    let m = g.num_edges();
    if k == 0 || k > m {
        return Err(Error::RankOutOfRange { k, max: m });
    }
    let b = build_incidence(g)?.combined_incidence(beta)?;
    let (values, svd_converged) = if b.ncols() <= DEFAULT_DENSE_EDGE_CAP {
        (node_side_spectrum(&b), true)
    } else {
        let factors = truncated_svd(&b, k.max(2).min(m), opts)?;
        (factors.sigma, factors.converged)
    };
    let sigma = |i: usize| values.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
    let sigma2 = if m == 1 { 0.0 } else { sigma(1) };
    let sigma_k = sigma(k - 1);

    let sigma2_sq = sigma2 * sigma2;
    let gap = 1.0 - sigma2_sq;
    let inv_spectral_gap = if gap <= MIN_DENOMINATOR { f64::INFINITY } else { 1.0 / gap };
    Ok(SpectralReport {
        sigma2,
        sigma2_sq,
        inv_spectral_gap,
        mix_lower_bound: inv_spectral_gap - 1.0,
        sigma_k,
        theorem1_bound: 1.0 / (1.0 - alpha * sigma_k * sigma_k).max(MIN_DENOMINATOR),
        k,
        alpha,
        beta,
        svd_converged,
    })
}

/// Singular values of `b`, descending, from the eigenvalues of `bᵀb`.
fn node_side_spectrum(b: &SparseCsr) -> Vec<f64> {
    let gram = b.transpose().gram_dense();
    let mut values: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| math::sqrt(l.max(0.0)))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Variance of each column of `Pᵗf` around its stationary mean.
///
/// `P` is doubly stochastic, so the stationary distribution is uniform and
/// every column mean of `f` is preserved by `P`. Entry `c` of the result is
/// `(1/|E|) Σ_i ((Pᵗf)[i,c] − mean(f[:,c]))²`.
pub fn variance_contraction(p: &Mat, f: &Mat, t: usize) -> Result<Vec<f64>> {
    let n = p.nrows();
    check_shape("variance_contraction", (n, n), p.shape())?;
    check_shape("variance_contraction", (n, f.ncols()), f.shape())?;
    check_cap(n)?;
    let means: Vec<f64> = f.column_iter().map(|c| c.sum() / n as f64).collect();
    let mut g = f.clone();
    for _ in 0..t {
        g = p * g;
    }
    Ok(g
        .column_iter()
        .zip(&means)
        .map(|(col, &mu)| col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n as f64)
        .collect())
}

/// Serializes non-finite values as the string `"inf"`; JSON has no infinity.
mod inf_as_string {
    use alloc::string::String;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(alloc::format!("unexpected value {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_edge_report() {
        let g = Eabg::new(1, 1, vec![(0, 0)], Mat::zeros(1, 1), None).unwrap();
        let r = spectral_report(&g, 0.5, 0.5, 1, &SvdOptions::default()).unwrap();
        assert_eq!(r.sigma2, 0.0);
        assert_eq!(r.mix_lower_bound, 0.0);
        assert!((r.sigma_k - 1.0).abs() < 1e-12);
        assert!((r.theorem1_bound - 2.0).abs() < 1e-10);
    }

    #[test]
    fn disjoint_edges_never_mix() {
        let g = Eabg::new(2, 2, vec![(0, 0), (1, 1)], Mat::zeros(2, 1), None).unwrap();
        let r = spectral_report(&g, 0.5, 0.5, 2, &SvdOptions::default()).unwrap();
        assert!((r.sigma2 - 1.0).abs() < 1e-12);
        assert!(r.mix_lower_bound.is_infinite());
        assert!(r.inv_spectral_gap.is_infinite());
    }

    #[test]
    fn matches_dense_singular_values() {
        let edges = vec![(0, 0), (0, 1), (1, 1), (2, 1), (2, 2), (3, 0), (3, 2), (1, 0)];
        let g = Eabg::new(4, 3, edges, Mat::zeros(8, 1), None).unwrap();
        let b = build_incidence(&g).unwrap().combined_incidence(0.3).unwrap();
        let dense = crate::sparse::dense_singular_values(&b).unwrap();
        let r = spectral_report(&g, 0.5, 0.3, 3, &SvdOptions::default()).unwrap();
        assert!((r.sigma2 - dense[1]).abs() < 1e-12);
        assert!((r.sigma_k - dense[2]).abs() < 1e-12);
        assert!(r.svd_converged);
    }

    #[test]
    fn rank_checked() {
        let g = Eabg::new(1, 1, vec![(0, 0)], Mat::zeros(1, 1), None).unwrap();
        assert!(matches!(
            spectral_report(&g, 0.5, 0.5, 2, &SvdOptions::default()),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_steps_is_plain_variance() {
        let f = Mat::from_row_slice(3, 1, &[1.0, 2.0, 6.0]);
        let p = Mat::from_element(3, 3, 1.0 / 3.0);
        let v = variance_contraction(&p, &f, 0).unwrap();
        assert!((v[0] - 14.0 / 3.0).abs() < 1e-12);
        assert!(variance_contraction(&p, &f, 1).unwrap()[0] < 1e-24);
    }

    #[test]
    fn identity_keeps_variance() {
        let f = Mat::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, 6.0, -1.0]);
        let p = Mat::identity(3, 3);
        assert_eq!(
            variance_contraction(&p, &f, 5).unwrap(),
            variance_contraction(&p, &f, 0).unwrap()
        );
    }
}
