//! Bounded cross-entropy, 0-1 loss and mixup composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argmax, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Probability floor; the loss saturates at 1 below it.
    pub p_min: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { p_min: 1e-4 }
    }
}

impl LossConfig {
    pub fn new(p_min: f64) -> Result<Self> {
        if !(p_min > 0.0 && p_min < 1.0) {
            return Err(Error::Parameter(format!("p_min must lie in (0, 1), got {p_min}")));
        }
        Ok(Self { p_min })
    }

    /// Checks `p_min < 1/num_classes`, without which the loss cannot reach 0.
    pub fn validate_for(&self, num_classes: usize) -> Result<()> {
        if self.p_min >= 1.0 / num_classes as f64 {
            return Err(Error::Parameter(format!(
                "p_min {} must be below 1/{num_classes}",
                self.p_min
            )));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        -self.p_min.ln()
    }
}

fn check_label(probs: &[f64], label: usize) -> Result<()> {
    if label >= probs.len() {
        return Err(Error::Index(format!("label {label} with {} classes", probs.len())));
    }
    Ok(())
}

/// `log(1/max(p_y, p_min)) / log(1/p_min)`, always in `[0, 1]`.
pub fn bounded_xe(probs: &[f64], label: usize, cfg: &LossConfig) -> Result<f64> {
    check_label(probs, label)?;
    let p = probs[label].max(cfg.p_min);
    Ok((-p.ln() / cfg.scale()).clamp(0.0, 1.0))
}

/// Gradient of the bounded cross-entropy with respect to the logits that
/// produced `probs` through softmax. Zero on the clamped side (`p_y ≤ p_min`).
pub fn bounded_xe_grad(probs: &[f64], label: usize, cfg: &LossConfig) -> Result<Vec<f64>> {
    check_label(probs, label)?;
    if probs[label] <= cfg.p_min {
        return Ok(vec![0.0; probs.len()]);
    }
    let s = cfg.scale();
    Ok(probs
        .iter()
        .enumerate()
        .map(|(j, &p)| (p - if j == label { 1.0 } else { 0.0 }) / s)
        .collect())
}

/// 0 when the argmax (lowest index on ties) equals `label`, else 1.
pub fn zero_one(probs: &[f64], label: usize) -> Result<u8> {
    check_label(probs, label)?;
    Ok(u8::from(argmax(probs) != label))
}

/// Mean bounded cross-entropy over a batch and its logit gradient, already
/// divided by the batch size.
pub fn batch_bounded_xe(probs: &Matrix, labels: &[usize], cfg: &LossConfig) -> Result<(f64, Matrix)> {
    if probs.rows() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} prediction rows for {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    let n = labels.len() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let p = probs.row(r);
        loss += bounded_xe(p, y, cfg)?;
        for (g, d) in grad.row_mut(r).iter_mut().zip(bounded_xe_grad(p, y, cfg)?) {
            *g = d / n;
        }
    }
    Ok((loss / n, grad))
}

/// A convex combination of two examples and their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedExample {
    pub x: Vec<f64>,
    pub label_a: usize,
    pub label_b: usize,
    pub lambda: f64,
}

impl MixedExample {
    /// `λ·ℓ(probs, y_a) + (1-λ)·ℓ(probs, y_b)`.
    pub fn loss(&self, probs: &[f64], cfg: &LossConfig) -> Result<f64> {
        Ok(self.lambda * bounded_xe(probs, self.label_a, cfg)?
            + (1.0 - self.lambda) * bounded_xe(probs, self.label_b, cfg)?)
    }

    pub fn grad(&self, probs: &[f64], cfg: &LossConfig) -> Result<Vec<f64>> {
        let ga = bounded_xe_grad(probs, self.label_a, cfg)?;
        let gb = bounded_xe_grad(probs, self.label_b, cfg)?;
        Ok(ga
            .iter()
            .zip(gb)
            .map(|(a, b)| self.lambda * a + (1.0 - self.lambda) * b)
            .collect())
    }
}

pub fn mixup_compose(xi: &[f64], xj: &[f64], yi: usize, yj: usize, lambda: f64) -> Result<MixedExample> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("mixup λ must lie in [0, 1], got {lambda}")));
    }
    if xi.len() != xj.len() {
        return Err(Error::Dimension("mixup inputs differ in width".into()));
    }
    Ok(MixedExample {
        x: xi
            .iter()
            .zip(xj)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect(),
        label_a: yi,
        label_b: yj,
        lambda,
    })
}
