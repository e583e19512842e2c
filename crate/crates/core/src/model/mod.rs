//! Trainable parts: the feature transform `f_Θ`, the head `f_Ω`, and the
//! full-batch training loop around a fixed propagation operator.

mod adam;
mod layers;
mod network;
mod train;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagate::{Combinator, Rank};
use crate::sparse::SvdOptions;
use crate::Mat;

pub use adam::{AdamConfig, AdamState};
pub use layers::{bce_loss, dropout_mask, feature_transform, predict, PROB_CLAMP};
pub use network::{loss_and_grads, DropoutMasks, Forward, Grads, Pipeline, Propagation};
pub use train::{
    evaluate_rows, train, train_with, EpochRecord, LabelAccess, LabelAudit, Partition, TrainOutcome,
};

/// Which edge representation feeds the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Single propagation through the combined transition matrix.
    Ffp,
    /// Separate U- and V-view propagation, merged by a combinator.
    Dvffp,
    /// No propagation at all: the structure-free control.
    Fc,
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ffp" => Ok(Mode::Ffp),
            "dvffp" => Ok(Mode::Dvffp),
            "fc" => Ok(Mode::Fc),
            _ => Err(Error::param("mode", "expected one of ffp, dvffp, fc")),
        }
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Mode::Ffp => "ffp",
            Mode::Dvffp => "dvffp",
            Mode::Fc => "fc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: Rank,
    /// Hidden width of `f_Θ`.
    pub z: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub combinator: Combinator,
    pub mode: Mode,
    pub svd: SvdOptions,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.5,
            k: Rank::Truncated(256),
            z: 256,
            dropout_rate: 0.5,
            learning_rate: 0.001,
            max_epochs: 300,
            seed: 0,
            combinator: Combinator::Max,
            mode: Mode::Ffp,
            svd: SvdOptions::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, x: f64, closed: bool| {
            let ok = if closed { (0.0..=1.0).contains(&x) } else { (0.0..1.0).contains(&x) };
            if ok {
                Ok(())
            } else {
                Err(Error::param(name, if closed { "must lie in [0, 1]" } else { "must lie in [0, 1)" }))
            }
        };
        unit("alpha", self.alpha, false)?;
        unit("beta", self.beta, true)?;
        unit("gamma", self.gamma, true)?;
        unit("dropout_rate", self.dropout_rate, false)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if self.z == 0 {
            return Err(Error::param("z", "must be positive"));
        }
        Ok(())
    }

    /// Number of `Θ` matrices the mode trains.
    pub fn num_thetas(&self) -> usize {
        match self.mode {
            Mode::Dvffp => 2,
            _ => 1,
        }
    }

    /// Width of the representation entering the head.
    pub fn head_width(&self) -> usize {
        match self.mode {
            Mode::Dvffp => self.combinator.output_width(self.z),
            _ => self.z,
        }
    }
}

/// Weights and optimizer state. `thetas` holds `Θ` (or `Θ_U`, `Θ_V`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub thetas: Vec<Mat>,
    pub omega: Mat,
    pub adam: AdamState,
}

fn fan_in_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    let bound = 1.0 / crate::math::sqrt(rows.max(1) as f64);
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

impl ModelParams {
    /// Uniform `±1/√fan_in` initialization from the config seed.
    pub fn init(config: &TrainConfig, attr_dim: usize, num_classes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let thetas: Vec<Mat> = (0..config.num_thetas())
            .map(|_| fan_in_uniform(attr_dim, config.z, &mut rng))
            .collect();
        let omega = fan_in_uniform(config.head_width(), num_classes, &mut rng);
        Self::from_weights(thetas, omega)
    }

    /// Fresh optimizer state around existing weights.
    pub fn from_weights(thetas: Vec<Mat>, omega: Mat) -> Self {
        let adam = AdamState::new(thetas.iter().chain(core::iter::once(&omega)));
        Self { thetas, omega, adam }
    }

    pub fn weights(&self) -> Vec<&Mat> {
        self.thetas.iter().chain(core::iter::once(&self.omega)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights().iter().all(|w| w.iter().all(|x| x.is_finite()))
    }

    /// One Adam update with the gradients in the same weight order.
    pub fn adam_step(&mut self, grads: &Grads, lr: f64, cfg: &AdamConfig) -> Result<()> {
        let mut weights: Vec<&mut Mat> = self.thetas.iter_mut().collect();
        weights.push(&mut self.omega);
        let g: Vec<&Mat> = grads.thetas.iter().chain(core::iter::once(&grads.omega)).collect();
        self.adam.step(&mut weights, &g, lr, cfg)
    }
}
