//! Full-batch training with validation-based model selection.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{logit_grad, DropoutMasks, Pipeline};
use super::{ModelParams, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{check_edge_rows, Eabg};
use crate::metrics::{evaluate, DataSplit, MetricReport};
use crate::propagate::FactorCache;
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

/// Number of label reads per partition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAudit {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Hands out label rows one partition at a time and counts every read.
#[derive(Debug)]
pub struct LabelAccess<'a> {
    labels: &'a Mat,
    split: &'a DataSplit,
    audit: LabelAudit,
}

impl<'a> LabelAccess<'a> {
    pub fn new(labels: &'a Mat, split: &'a DataSplit) -> Result<Self> {
        let n = labels.nrows();
        let all = split.train_idx.iter().chain(&split.val_idx).chain(&split.test_idx);
        if let Some(&r) = all.clone().find(|&&r| r >= n) {
            return Err(Error::param("split", alloc::format!("edge {r} out of range")));
        }
        Ok(Self {
            labels,
            split,
            audit: LabelAudit::default(),
        })
    }

    /// Row indices of the partition and their labels, in the same order.
    pub fn read(&mut self, part: Partition) -> (&'a [usize], Mat) {
        let rows: &'a [usize] = match part {
            Partition::Train => {
                self.audit.train += 1;
                &self.split.train_idx
            }
            Partition::Validation => {
                self.audit.validation += 1;
                &self.split.val_idx
            }
            Partition::Test => {
                self.audit.test += 1;
                &self.split.test_idx
            }
        };
        (rows, self.labels.select_rows(rows.iter()))
    }

    pub fn audit(&self) -> LabelAudit {
        self.audit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Training loss of the step taken in this epoch, dropout included.
    pub train_loss: f64,
    /// `None` when no class of the validation set has both outcomes.
    pub val_ap: Option<f64>,
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Snapshot with the best validation AUC.
    pub params: ModelParams,
    /// Weights after the last epoch.
    pub last: ModelParams,
    pub pipeline: Pipeline,
    pub history: Vec<EpochRecord>,
    /// 0 when the initial weights were never improved on.
    pub best_epoch: usize,
    pub best_val_auc: Option<f64>,
    pub audit: LabelAudit,
}

/// Scores the model on `rows` (class probabilities against `labels`, both
/// indexed by edge).
pub fn evaluate_rows(
    pipeline: &Pipeline,
    x: &Mat,
    params: &ModelParams,
    labels: &Mat,
    rows: &[usize],
) -> Result<MetricReport> {
    let scores = pipeline.scores(x, params)?;
    evaluate(&scores, labels, rows)
}

fn compact_report(scores: &Mat, rows: &[usize], labels: &Mat) -> Result<Option<MetricReport>> {
    let sub = scores.select_rows(rows.iter());
    let idx: Vec<usize> = (0..rows.len()).collect();
    match evaluate(&sub, labels, &idx) {
        Ok(r) => Ok(Some(r)),
        Err(Error::DegenerateLabels) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains from scratch with a private factor cache.
pub fn train(g: &Eabg, split: &DataSplit, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(g, split, config, &mut FactorCache::new())
}

/// Trains with factorizations drawn from (and added to) `cache`. Test labels
/// are never read.
pub fn train_with(
    g: &Eabg,
    split: &DataSplit,
    config: &TrainConfig,
    cache: &mut FactorCache,
) -> Result<TrainOutcome> {
    config.validate()?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::param("labels", "training needs a labeled graph"))?;
    if split.train_idx.is_empty() || split.val_idx.is_empty() || split.test_idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    let x = g.attrs();
    check_edge_rows("train", g, x)?;
    let pipeline = Pipeline::new(g, config, cache)?;

    let mut access = LabelAccess::new(labels, split)?;
    let (train_rows, train_y) = access.read(Partition::Train);
    let (val_rows, val_y) = access.read(Partition::Validation);

    let mut params = ModelParams::init(config, g.attr_dim(), g.num_classes());
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(1);
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_val_auc: Option<f64> = None;
    let mut history = Vec::with_capacity(config.max_epochs);

    for epoch in 1..=config.max_epochs {
        let masks = if config.dropout_rate > 0.0 {
            Some(DropoutMasks::sample(
                g.num_edges(),
                config.z,
                pipeline.num_branches(),
                config.head_width(),
                config.dropout_rate,
                &mut dropout_rng,
            )?)
        } else {
            None
        };
        let fwd = pipeline.forward(x, &params, masks.as_ref())?;
        let train_probs = fwd.probs.select_rows(train_rows.iter());
        let compact: Vec<usize> = (0..train_rows.len()).collect();
        let loss = super::bce_loss(&train_probs, &train_y, &compact)?;
        let d_logits = logit_grad(&fwd.probs, &train_y, train_rows)?;
        let grads = pipeline.backward(x, &params, &fwd, &d_logits, masks.as_ref())?;
        params.adam_step(&grads, config.learning_rate, &config.adam)?;
        if !params.is_finite() {
            return Err(Error::NotConverged {
                iters: epoch,
                update: f64::NAN,
            });
        }

        let scores = pipeline.scores(x, &params)?;
        let report = compact_report(&scores, val_rows, &val_y)?;
        let val_auc = report.as_ref().map(|r| r.auc);
        history.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_ap: report.as_ref().map(|r| r.ap),
            val_auc,
        });
        if let Some(auc) = val_auc {
            if best_val_auc.is_none_or(|b| auc > b) {
                best_val_auc = Some(auc);
                best_epoch = epoch;
                best = params.clone();
            }
        }
    }
    if best_val_auc.is_none() && config.max_epochs > 0 {
        best = params.clone();
        best_epoch = config.max_epochs;
    }
    Ok(TrainOutcome {
        params: best,
        last: params,
        pipeline,
        history,
        best_epoch,
        best_val_auc,
        audit: access.audit(),
    })
}
