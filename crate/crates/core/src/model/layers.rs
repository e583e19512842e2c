//! Feature transform, output head, and loss.

use rand::Rng;

use crate::error::{check_shape, Error, Result};
use crate::math;
use crate::Mat;

/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::param("dropout_rate", "must lie in [0, 1)"))
    }
}

/// Inverted-dropout mask: each entry is `0` with probability `rate`,
/// otherwise `1/(1 − rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, rate: f64, rng: &mut R) -> Result<Mat> {
    check_rate(rate)?;
    let keep = 1.0 - rate;
    if rate == 0.0 {
        return Ok(Mat::from_element(rows, cols, 1.0));
    }
    // column-major fill; the draw order is part of the seed contract
    Ok(Mat::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            1.0 / keep
        }
    }))
}

pub(crate) fn relu(m: &Mat) -> Mat {
    m.map(|x| if x > 0.0 { x } else { 0.0 })
}

fn apply_mask(h: &mut Mat, mask: Option<&Mat>) -> Result<()> {
    if let Some(mask) = mask {
        check_shape("dropout", h.shape(), mask.shape())?;
        h.component_mul_assign(mask);
    }
    Ok(())
}

/// `dropout(relu(x·θ))`. Without a mask (inference) no dropout is applied.
pub fn feature_transform(x: &Mat, theta: &Mat, mask: Option<&Mat>) -> Result<Mat> {
    check_shape("feature_transform", (x.ncols(), theta.ncols()), theta.shape())?;
    let mut h = relu(&(x * theta));
    apply_mask(&mut h, mask)?;
    Ok(h)
}

/// `sigmoid(dropout(relu(z))·ω)`, one independent probability per class.
pub fn predict(z: &Mat, omega: &Mat, mask: Option<&Mat>) -> Result<Mat> {
    check_shape("predict", (z.ncols(), omega.ncols()), omega.shape())?;
    let mut g = relu(z);
    apply_mask(&mut g, mask)?;
    Ok((g * omega).map(math::sigmoid))
}

/// Mean over the listed rows of the summed per-class binary cross-entropy.
pub fn bce_loss(y_pred: &Mat, y_true: &Mat, rows: &[usize]) -> Result<f64> {
    check_shape("bce_loss", y_true.shape(), y_pred.shape())?;
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= y_pred.nrows()) {
        return Err(Error::param("rows", alloc::format!("row {r} out of range")));
    }
    let mut total = 0.0;
    for &r in rows {
        for c in 0..y_pred.ncols() {
            let p = y_pred[(r, c)].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            let y = y_true[(r, c)];
            total -= y * math::ln(p) + (1.0 - y) * math::ln(1.0 - p);
        }
    }
    Ok(total / rows.len() as f64)
}
