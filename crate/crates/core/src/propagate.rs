//! Factorized feature propagation.
//!
//! The propagated representation is `Z = (1−α) Σ_t αᵗ Pᵗ h = (1−α)(I − αP)⁻¹ h`.
//! With `U, Σ` the leading left singular pairs of a normalized incidence `B`
//! (so that `P = B Bᵀ`), `Q = U·diag(1/√(1 − ασ²))` gives
//! `Q Qᵀ ≈ (I − αP)⁻¹`, exactly so when `k = |E|`. The output of this module is
//! always the scaled form `(1−α)·Q(Qᵀh)`, which matches the closed form with no
//! extra constant.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::graph::{build_incidence, check_edge_rows, Eabg, IncidencePair, View};
use crate::sparse::dense::check_cap;
use crate::sparse::{power_iteration_solve, truncated_svd, FactoredTransition, SparseCsr, SvdFactors, SvdOptions};
use crate::Mat;

/// Floor on `1 − ασ²` before taking its reciprocal.
pub const MIN_DENOMINATOR: f64 = 1e-12;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::param("alpha", "must lie in [0, 1)"))
    }
}

/// The `Q` factor of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorQ {
    q: Mat,
    sigma: Vec<f64>,
    view: View,
    alpha: f64,
}

/// Computes the view's truncated SVD and turns it into `Q`.
pub fn build_q(g: &Eabg, alpha: f64, view: View, k: usize, opts: &SvdOptions) -> Result<PropagatorQ> {
    let inc = build_incidence(g)?;
    build_q_from_incidence(&inc, alpha, view, k, opts)
}

pub fn build_q_from_incidence(
    inc: &IncidencePair,
    alpha: f64,
    view: View,
    k: usize,
    opts: &SvdOptions,
) -> Result<PropagatorQ> {
    check_alpha(alpha)?;
    let b = inc.normalized(view)?;
    let factors = truncated_svd(&b, k, opts)?;
    PropagatorQ::from_factors(&factors, view, alpha)
}

impl PropagatorQ {
    /// Scales the singular vectors by `1/√(1 − ασ²)`, clamping `σ` to `[0, 1]`.
    pub fn from_factors(factors: &SvdFactors, view: View, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let sigma: Vec<f64> = factors.sigma.iter().map(|s| s.clamp(0.0, 1.0)).collect();
        let mut q = factors.u.clone();
        for (j, &s) in sigma.iter().enumerate() {
            let denom = (1.0 - alpha * s * s).max(MIN_DENOMINATOR);
            let mut col = q.column_mut(j);
            col *= 1.0 / crate::math::sqrt(denom);
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("factors", "singular vectors must be finite"));
        }
        Ok(Self { q, sigma, view, alpha })
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    /// Clamped singular values the factor was built from.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.q.ncols()
    }

    pub fn num_edges(&self) -> usize {
        self.q.nrows()
    }

    /// `(1−α)·Q(Qᵀh)`, right to left.
    pub fn apply(&self, h: &Mat) -> Result<Mat> {
        check_shape("propagate", (self.q.nrows(), h.ncols()), h.shape())?;
        let inner = crate::tr_mul(&self.q, h);
        Ok((&self.q * inner) * (1.0 - self.alpha))
    }

    /// The dense operator `(1−α) Q Qᵀ`; refused above the dense edge cap.
    pub fn dense_operator(&self) -> Result<Mat> {
        check_cap(self.q.nrows())?;
        Ok((&self.q * self.q.transpose()) * (1.0 - self.alpha))
    }
}

/// Exact propagation by fixed-point iteration on `P = B Bᵀ`, the `k = ∞`
/// setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPropagator {
    incidence: SparseCsr,
    view: View,
    alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl ExactPropagator {
    pub fn new(inc: &IncidencePair, view: View, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            incidence: inc.normalized(view)?,
            view,
            alpha,
            tol: 1e-12,
            max_iters: 100_000,
        })
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn apply(&self, h: &Mat) -> Result<Mat> {
        let op = FactoredTransition {
            incidence: &self.incidence,
        };
        Ok(power_iteration_solve(&op, self.alpha, h, self.tol, self.max_iters)?.z)
    }
}

/// A linear, self-adjoint propagation operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Propagator {
    Factorized(PropagatorQ),
    Exact(ExactPropagator),
}

impl Propagator {
    pub fn apply(&self, h: &Mat) -> Result<Mat> {
        match self {
            Propagator::Factorized(q) => q.apply(h),
            Propagator::Exact(e) => e.apply(h),
        }
    }

    pub fn view(&self) -> View {
        match self {
            Propagator::Factorized(q) => q.view(),
            Propagator::Exact(e) => e.view(),
        }
    }
}

/// Truncation rank: a finite `k`, or exact propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Truncated(usize),
    Exact,
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Truncated(k) => write!(f, "{k}"),
            Rank::Exact => f.write_str("inf"),
        }
    }
}

impl core::str::FromStr for Rank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "∞" => Ok(Rank::Exact),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .map(Rank::Truncated)
                .ok_or_else(|| Error::param("k", "expected a positive integer or `inf`")),
        }
    }
}

impl Serialize for Rank {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Rank::Truncated(k) => s.serialize_u64(*k as u64),
            Rank::Exact => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) if k > 0 => Ok(Rank::Truncated(k as usize)),
            Raw::Num(_) => Err(serde::de::Error::custom("k must be positive")),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CacheKey {
    view: (u8, u64),
    k: usize,
    opts: SvdOptions,
}

fn view_key(view: View) -> (u8, u64) {
    match view {
        View::Combined { beta } => (0, beta.to_bits()),
        View::U => (1, 0),
        View::V => (2, 0),
    }
}

/// Memoizes truncated SVDs per (view, k, options) so that changing `α`, `γ`
/// or the combinator never recomputes a factorization.
#[derive(Debug, Clone, Default)]
pub struct FactorCache {
    entries: Vec<(CacheKey, SvdFactors)>,
    computed: usize,
}

impl FactorCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of SVDs actually computed so far.
    pub fn svd_count(&self) -> usize {
        self.computed
    }

    pub fn factors(
        &mut self,
        inc: &IncidencePair,
        view: View,
        k: usize,
        opts: &SvdOptions,
    ) -> Result<&SvdFactors> {
        let key = CacheKey {
            view: view_key(view),
            k,
            opts: *opts,
        };
        let pos = match self.entries.iter().position(|(kk, _)| *kk == key) {
            Some(p) => p,
            None => {
                let factors = truncated_svd(&inc.normalized(view)?, k, opts)?;
                self.computed += 1;
                self.entries.push((key, factors));
                self.entries.len() - 1
            }
        };
        Ok(&self.entries[pos].1)
    }

    pub fn propagator(
        &mut self,
        inc: &IncidencePair,
        view: View,
        alpha: f64,
        rank: Rank,
        opts: &SvdOptions,
    ) -> Result<Propagator> {
        match rank {
            Rank::Truncated(k) => {
                check_alpha(alpha)?;
                let f = self.factors(inc, view, k, opts)?;
                Ok(Propagator::Factorized(PropagatorQ::from_factors(f, view, alpha)?))
            }
            Rank::Exact => Ok(Propagator::Exact(ExactPropagator::new(inc, view, alpha)?)),
        }
    }
}

/// How two view-wise representations are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combinator {
    Sum,
    Max,
    Concat,
}

impl Combinator {
    /// Output width for per-view width `z`.
    pub fn output_width(self, z: usize) -> usize {
        match self {
            Combinator::Concat => 2 * z,
            _ => z,
        }
    }
}

impl core::str::FromStr for Combinator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Combinator::Sum),
            "max" => Ok(Combinator::Max),
            "concat" => Ok(Combinator::Concat),
            _ => Err(Error::param("combinator", "expected one of sum, max, concat")),
        }
    }
}

impl fmt::Display for Combinator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combinator::Sum => "sum",
            Combinator::Max => "max",
            Combinator::Concat => "concat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Single { view: View },
    Dual { gamma: f64, combinator: Combinator },
}

/// Per-edge representations.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEmbedding {
    pub z: Mat,
    pub provenance: Provenance,
}

pub fn propagate_ffp(q: &PropagatorQ, h: &Mat) -> Result<EdgeEmbedding> {
    Ok(EdgeEmbedding {
        z: q.apply(h)?,
        provenance: Provenance::Single { view: q.view() },
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::param("gamma", "must lie in [0, 1]"))
    }
}

/// `combine(γ·z_u, (1−γ)·z_v)`. `Max` keeps the U-side value on ties and
/// `Concat` places the U block first.
pub fn combine(z_u: &Mat, z_v: &Mat, gamma: f64, combinator: Combinator) -> Result<Mat> {
    check_gamma(gamma)?;
    check_shape("combine", z_u.shape(), z_v.shape())?;
    let a = z_u * gamma;
    let b = z_v * (1.0 - gamma);
    Ok(match combinator {
        Combinator::Sum => a + b,
        Combinator::Max => a.zip_map(&b, |x, y| if x >= y { x } else { y }),
        Combinator::Concat => {
            let (n, w) = a.shape();
            let mut out = Mat::zeros(n, 2 * w);
            out.columns_mut(0, w).copy_from(&a);
            out.columns_mut(w, w).copy_from(&b);
            out
        }
    })
}

pub fn propagate_dual(
    qu: &PropagatorQ,
    qv: &PropagatorQ,
    hu: &Mat,
    hv: &Mat,
    gamma: f64,
    combinator: Combinator,
) -> Result<EdgeEmbedding> {
    if qu.view() != View::U || qv.view() != View::V {
        return Err(Error::param("views", "dual propagation needs a U-view and a V-view factor"));
    }
    check_shape("propagate_dual", hu.shape(), hv.shape())?;
    let z_u = qu.apply(hu)?;
    let z_v = qv.apply(hv)?;
    Ok(EdgeEmbedding {
        z: combine(&z_u, &z_v, gamma, combinator)?,
        provenance: Provenance::Dual { gamma, combinator },
    })
}

/// Sum over each node's incident edges of `(1/deg)·Σ_{i,j} ‖z_i − z_j‖²`,
/// ordered pairs including `i = j`.
fn pair_penalty(adjacency: &[Vec<usize>], z: &Mat) -> f64 {
    let mut total = 0.0;
    for members in adjacency {
        let w = 1.0 / members.len() as f64;
        for &i in members {
            for &j in members {
                if i != j {
                    total += w * (z.row(i) - z.row(j)).norm_squared();
                }
            }
        }
    }
    total
}

/// `(1−α)‖Z − h‖²_F + α·[β/2·(U-term) + (1−β)/2·(V-term)]`, the objective whose
/// unique minimizer is the closed-form propagation.
pub fn objective_value(g: &Eabg, z: &Mat, h: &Mat, alpha: f64, beta: f64) -> Result<f64> {
    check_cap(g.num_edges())?;
    check_edge_rows("objective_value", g, z)?;
    check_shape("objective_value", z.shape(), h.shape())?;
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("alpha/beta", "must lie in [0, 1]"));
    }
    let fit = (z - h).norm_squared();
    let reg_u = pair_penalty(&g.u_adjacency(), z);
    let reg_v = pair_penalty(&g.v_adjacency(), z);
    let reg = 0.5 * beta * reg_u + 0.5 * (1.0 - beta) * reg_v;
    Ok((1.0 - alpha) * fit + alpha * reg)
}
