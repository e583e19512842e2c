//! Forward and backward passes of `predict ∘ propagate ∘ feature_transform`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{dropout_mask, relu};
use super::{Mode, ModelParams, TrainConfig};
use crate::error::{check_shape, Error, Result};
use crate::graph::{build_incidence, Eabg, View};
use crate::math;
use crate::propagate::{combine, Combinator, FactorCache, Propagator};
use crate::Mat;

/// The fixed, weight-independent operator between `f_Θ` and `f_Ω`.
#[derive(Debug, Clone, PartialEq)]
pub enum Propagation {
    None,
    Single(Propagator),
    Dual {
        u: Propagator,
        v: Propagator,
        gamma: f64,
        combinator: Combinator,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub propagation: Propagation,
}

/// Dropout masks for one training step: one per `Θ` branch, plus the head.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub hidden: Vec<Mat>,
    pub head: Mat,
}

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(
        rows: usize,
        z: usize,
        branches: usize,
        head_width: usize,
        rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let hidden = (0..branches)
            .map(|_| dropout_mask(rows, z, rate, rng))
            .collect::<Result<Vec<_>>>()?;
        let head = dropout_mask(rows, head_width, rate, rng)?;
        Ok(Self { hidden, head })
    }
}

/// Intermediate values of a forward pass, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// `x·Θ` per branch.
    pub pre: Vec<Mat>,
    /// Propagated branch outputs before combination.
    pub branches: Vec<Mat>,
    /// Edge representation entering the head.
    pub z: Mat,
    /// `dropout(relu(z))`.
    pub head_in: Mat,
    pub probs: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub thetas: Vec<Mat>,
    pub omega: Mat,
}

impl Grads {
    pub fn max_abs(&self) -> f64 {
        self.thetas.iter().chain(core::iter::once(&self.omega)).map(|g| g.amax()).fold(0.0, f64::max)
    }
}

fn relu_grad(upstream: &Mat, pre: &Mat, mask: Option<&Mat>) -> Mat {
    let mut d = upstream.zip_map(pre, |g, a| if a > 0.0 { g } else { 0.0 });
    if let Some(m) = mask {
        d.component_mul_assign(m);
    }
    d
}

impl Pipeline {
    /// Builds the propagation operator(s) the config asks for, reusing any
    /// factorization already held by `cache`.
    pub fn new(g: &Eabg, config: &TrainConfig, cache: &mut FactorCache) -> Result<Self> {
        config.validate()?;
        let propagation = match config.mode {
            Mode::Fc => Propagation::None,
            Mode::Ffp => {
                let inc = build_incidence(g)?;
                let view = View::Combined { beta: config.beta };
                Propagation::Single(cache.propagator(&inc, view, config.alpha, config.k, &config.svd)?)
            }
            Mode::Dvffp => {
                let inc = build_incidence(g)?;
                Propagation::Dual {
                    u: cache.propagator(&inc, View::U, config.alpha, config.k, &config.svd)?,
                    v: cache.propagator(&inc, View::V, config.alpha, config.k, &config.svd)?,
                    gamma: config.gamma,
                    combinator: config.combinator,
                }
            }
        };
        Ok(Self { propagation })
    }

    pub fn num_branches(&self) -> usize {
        match self.propagation {
            Propagation::Dual { .. } => 2,
            _ => 1,
        }
    }

    fn propagate_branch(&self, branch: usize, h: Mat) -> Result<Mat> {
        match &self.propagation {
            Propagation::None => Ok(h),
            Propagation::Single(p) => p.apply(&h),
            Propagation::Dual { u, v, .. } => [u, v][branch].apply(&h),
        }
    }

    fn check_params(&self, x: &Mat, params: &ModelParams) -> Result<()> {
        if params.thetas.len() != self.num_branches() {
            return Err(Error::param("params", "number of feature transforms does not match the mode"));
        }
        for theta in &params.thetas {
            check_shape("forward", (x.ncols(), theta.ncols()), theta.shape())?;
        }
        Ok(())
    }

    pub fn forward(&self, x: &Mat, params: &ModelParams, masks: Option<&DropoutMasks>) -> Result<Forward> {
        self.check_params(x, params)?;
        let mut pre = Vec::with_capacity(params.thetas.len());
        let mut branches = Vec::with_capacity(params.thetas.len());
        for (b, theta) in params.thetas.iter().enumerate() {
            let a = x * theta;
            let mut h = relu(&a);
            if let Some(m) = masks {
                check_shape("dropout", h.shape(), m.hidden[b].shape())?;
                h.component_mul_assign(&m.hidden[b]);
            }
            branches.push(self.propagate_branch(b, h)?);
            pre.push(a);
        }
        let z = match &self.propagation {
            Propagation::Dual { gamma, combinator, .. } => combine(&branches[0], &branches[1], *gamma, *combinator)?,
            _ => branches[0].clone(),
        };
        check_shape("head", (z.ncols(), params.omega.ncols()), params.omega.shape())?;
        let mut head_in = relu(&z);
        if let Some(m) = masks {
            check_shape("dropout", head_in.shape(), m.head.shape())?;
            head_in.component_mul_assign(&m.head);
        }
        let probs = (&head_in * &params.omega).map(math::sigmoid);
        Ok(Forward {
            pre,
            branches,
            z,
            head_in,
            probs,
        })
    }

    /// Class probabilities in inference mode.
    pub fn scores(&self, x: &Mat, params: &ModelParams) -> Result<Mat> {
        Ok(self.forward(x, params, None)?.probs)
    }

    /// Parameter gradients for an upstream gradient on the head logits.
    pub fn backward(
        &self,
        x: &Mat,
        params: &ModelParams,
        fwd: &Forward,
        d_logits: &Mat,
        masks: Option<&DropoutMasks>,
    ) -> Result<Grads> {
        check_shape("backward", fwd.probs.shape(), d_logits.shape())?;
        let omega = crate::tr_mul(&fwd.head_in, d_logits);
        let d_head = d_logits * params.omega.transpose();
        let d_z = relu_grad(&d_head, &fwd.z, masks.map(|m| &m.head));

        let d_branches: Vec<Mat> = match &self.propagation {
            Propagation::Dual { gamma, combinator, .. } => {
                let (g, zu, zv) = (*gamma, &fwd.branches[0], &fwd.branches[1]);
                match combinator {
                    Combinator::Sum => vec![&d_z * g, &d_z * (1.0 - g)],
                    Combinator::Max => {
                        // the U side wins ties, as in the forward pass
                        let u_wins = Mat::from_fn(zu.nrows(), zu.ncols(), |i, j| {
                            if g * zu[(i, j)] >= (1.0 - g) * zv[(i, j)] {
                                1.0
                            } else {
                                0.0
                            }
                        });
                        let du = d_z.component_mul(&u_wins) * g;
                        let dv = d_z.zip_map(&u_wins, |d, w| d * (1.0 - w)) * (1.0 - g);
                        vec![du, dv]
                    }
                    Combinator::Concat => {
                        let w = zu.ncols();
                        vec![d_z.columns(0, w) * g, d_z.columns(w, w) * (1.0 - g)]
                    }
                }
            }
            _ => vec![d_z],
        };

        let mut thetas = Vec::with_capacity(d_branches.len());
        for (b, d) in d_branches.into_iter().enumerate() {
            // the propagation operator is symmetric, so it is its own adjoint
            let d_h = self.propagate_branch(b, d)?;
            let d_a = relu_grad(&d_h, &fwd.pre[b], masks.map(|m| &m.hidden[b]));
            thetas.push(crate::tr_mul(x, &d_a));
        }
        Ok(Grads { thetas, omega })
    }
}

/// Gradient of the mean BCE with respect to the logits. `labels` holds the
/// label rows of `rows`, in the same order.
pub(crate) fn logit_grad(probs: &Mat, labels: &Mat, rows: &[usize]) -> Result<Mat> {
    check_shape("loss", (rows.len(), probs.ncols()), labels.shape())?;
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    let scale = 1.0 / rows.len() as f64;
    let mut d = Mat::zeros(probs.nrows(), probs.ncols());
    for (i, &r) in rows.iter().enumerate() {
        for c in 0..probs.ncols() {
            let p = probs[(r, c)];
            // the clamp inside the loss has zero slope outside its range
            if p > super::PROB_CLAMP && p < 1.0 - super::PROB_CLAMP {
                d[(r, c)] = (p - labels[(i, c)]) * scale;
            }
        }
    }
    Ok(d)
}

/// Loss on `rows` and its exact gradient with respect to every weight.
/// `labels` has one row per edge; only `rows` are read.
pub fn loss_and_grads(
    pipeline: &Pipeline,
    x: &Mat,
    params: &ModelParams,
    labels: &Mat,
    rows: &[usize],
    masks: Option<&DropoutMasks>,
) -> Result<(f64, Grads)> {
    let fwd = pipeline.forward(x, params, masks)?;
    check_shape("loss", fwd.probs.shape(), labels.shape())?;
    let loss = super::bce_loss(&fwd.probs, labels, rows)?;
    let sub = labels.select_rows(rows.iter());
    let d_logits = logit_grad(&fwd.probs, &sub, rows)?;
    let grads = pipeline.backward(x, params, &fwd, &d_logits, masks)?;
    Ok((loss, grads))
}
