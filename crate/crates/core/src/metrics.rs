//! Ranking metrics and the train / validation / test split.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::graph::Eabg;
use crate::math;
use crate::Mat;

/// Fewer labeled edges than this cannot be split three ways.
pub const MIN_SPLIT_EDGES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Splits the labeled edges of `g` by `ratios` (train, validation, test).
pub fn make_split(g: &Eabg, ratios: (f64, f64, f64), seed: u64) -> Result<DataSplit> {
    if g.labels().is_none() {
        return Err(Error::param("labels", "splitting needs a labeled graph"));
    }
    split_indices(g.num_edges(), ratios, seed)
}

/// Shuffles `0..num_edges` with `seed` and slices it by `ratios`
/// (train, validation, test). Validation and test sizes are rounded, training
/// takes the rest.
pub fn split_indices(num_edges: usize, ratios: (f64, f64, f64), seed: u64) -> Result<DataSplit> {
    if num_edges < MIN_SPLIT_EDGES {
        return Err(Error::TooFewEdges {
            found: num_edges,
            required: MIN_SPLIT_EDGES,
        });
    }
    let (tr, va, te) = ratios;
    let total = tr + va + te;
    if [tr, va, te].iter().any(|r| !(*r >= 0.0)) || !(total > 0.0) {
        return Err(Error::param("ratios", "must be non-negative with a positive sum"));
    }
    let n_val = math::round(num_edges as f64 * va / total) as usize;
    let n_test = math::round(num_edges as f64 * te / total) as usize;
    let mut perm: Vec<usize> = (0..num_edges).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = num_edges - n_val - n_test;
    Ok(DataSplit {
        train_idx: perm[..n_train].to_vec(),
        val_idx: perm[n_train..n_train + n_val].to_vec(),
        test_idx: perm[n_train + n_val..].to_vec(),
    })
}

fn check_binary(scores: &[f64], labels: &[f64]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            op: "metric",
            expected: (scores.len(), 1),
            found: (labels.len(), 1),
        });
    }
    let pos = labels.iter().filter(|&&y| y > 0.5).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok((pos, neg))
}

fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Step-wise area under the precision-recall curve,
/// `Σ (R_n − R_{n−1})·P_n` over descending score thresholds. Tied scores
/// enter at the same threshold.
pub fn average_precision(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, _) = check_binary(scores, labels)?;
    let order = descending_order(scores);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] > 0.5 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half (rank-sum form).
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, labels)?;
    let mut order = descending_order(scores);
    order.reverse();
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let start = i;
        while i < order.len() && scores[order[i]] == s {
            i += 1;
        }
        // ranks start..i (1-based start+1..=i) share their average
        let avg_rank = (start + 1 + i) as f64 / 2.0;
        let tied_pos = order[start..i].iter().filter(|&&j| labels[j] > 0.5).count();
        rank_sum_pos += avg_rank * tied_pos as f64;
    }
    let p = pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Macro-averaged AP / AUC over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ap: f64,
    pub auc: f64,
    /// `None` for classes skipped because the subset lacks positives or
    /// negatives.
    pub per_class_ap: Vec<Option<f64>>,
    pub per_class_auc: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
    pub num_rows: usize,
}

/// Evaluates class scores on the listed rows.
pub fn evaluate(scores: &Mat, labels: &Mat, rows: &[usize]) -> Result<MetricReport> {
    check_shape("evaluate", labels.shape(), scores.shape())?;
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut per_class_ap = Vec::with_capacity(labels.ncols());
    let mut per_class_auc = Vec::with_capacity(labels.ncols());
    let mut skipped = Vec::new();
    for c in 0..labels.ncols() {
        let s: Vec<f64> = rows.iter().map(|&r| scores[(r, c)]).collect();
        let y: Vec<f64> = rows.iter().map(|&r| labels[(r, c)]).collect();
        match (average_precision(&s, &y), roc_auc(&s, &y)) {
            (Ok(ap), Ok(auc)) => {
                per_class_ap.push(Some(ap));
                per_class_auc.push(Some(auc));
            }
            (Err(Error::DegenerateLabels), _) | (_, Err(Error::DegenerateLabels)) => {
                per_class_ap.push(None);
                per_class_auc.push(None);
                skipped.push(c);
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    let mean = |v: &[Option<f64>]| {
        let kept: Vec<f64> = v.iter().flatten().copied().collect();
        if kept.is_empty() {
            Err(Error::DegenerateLabels)
        } else {
            Ok(kept.iter().sum::<f64>() / kept.len() as f64)
        }
    };
    Ok(MetricReport {
        ap: mean(&per_class_ap)?,
        auc: mean(&per_class_auc)?,
        per_class_ap,
        per_class_auc,
        skipped_classes: skipped,
        num_rows: rows.len(),
    })
}
