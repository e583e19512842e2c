//! Adam with bias-corrected moments.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Result};
use crate::math;
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment buffers, one pair per weight, in the weight order of the owner.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Mat>,
    pub v: Vec<Mat>,
}

impl AdamState {
    pub fn new<'a>(weights: impl IntoIterator<Item = &'a Mat>) -> Self {
        let m: Vec<Mat> = weights.into_iter().map(|w| Mat::zeros(w.nrows(), w.ncols())).collect();
        Self {
            step: 0,
            v: m.clone(),
            m,
        }
    }

    /// One update of every weight. The step counter is advanced before the
    /// bias corrections are formed.
    pub fn step(&mut self, weights: &mut [&mut Mat], grads: &[&Mat], lr: f64, cfg: &AdamConfig) -> Result<()> {
        check_shape("adam_step", (self.m.len(), 1), (weights.len(), 1))?;
        check_shape("adam_step", (self.m.len(), 1), (grads.len(), 1))?;
        for ((w, g), m) in weights.iter().zip(grads).zip(&self.m) {
            check_shape("adam_step", m.shape(), w.shape())?;
            check_shape("adam_step", m.shape(), g.shape())?;
        }
        self.step += 1;
        let t = self.step.min(i32::MAX as u64) as i32;
        let bc1 = 1.0 - math::powi(cfg.beta1, t);
        let bc2 = 1.0 - math::powi(cfg.beta2, t);
        for (i, w) in weights.iter_mut().enumerate() {
            let g = grads[i];
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for j in 0..g.len() {
                let gj = g[j];
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                w[j] -= lr * m_hat / (math::sqrt(v_hat) + cfg.eps);
            }
        }
        Ok(())
    }
}
