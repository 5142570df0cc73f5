//! Forward and backward passes for one concrete setting of network weights.
//!
//! Both the deterministic prior networks and every weight sample of a
//! [`ProbNetwork`](crate::model::ProbNetwork) run through these routines.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argmax, softmax_rows, Matrix};
use crate::rng::SeededRng;

/// Weights of one affine layer: `w` is `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl LayerWeights {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            w: Matrix::zeros(n_out, n_in),
            b: vec![0.0; n_out],
        }
    }

    pub fn n_in(&self) -> usize {
        self.w.cols()
    }

    pub fn n_out(&self) -> usize {
        self.w.rows()
    }
}

/// Layer widths `[input, hidden..., classes]` of a weight stack.
pub fn dims_of(layers: &[LayerWeights]) -> Vec<usize> {
    let mut dims = Vec::with_capacity(layers.len() + 1);
    if let Some(first) = layers.first() {
        dims.push(first.n_in());
    }
    dims.extend(layers.iter().map(LayerWeights::n_out));
    dims
}

pub fn zeros_like(layers: &[LayerWeights]) -> Vec<LayerWeights> {
    layers
        .iter()
        .map(|l| LayerWeights::zeros(l.n_in(), l.n_out()))
        .collect()
}

/// Flat parameter views in `[w, b]` order per layer.
pub fn param_slices(layers: &[LayerWeights]) -> Vec<&[f64]> {
    layers.iter().flat_map(|l| [l.w.data(), l.b.as_slice()]).collect()
}

pub fn param_slices_mut(layers: &mut [LayerWeights]) -> Vec<&mut [f64]> {
    layers
        .iter_mut()
        .flat_map(|l| [l.w.data_mut(), l.b.as_mut_slice()])
        .collect()
}

/// Intermediates of a forward pass needed for backpropagation.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// Input to each layer (the batch itself for layer 0).
    pub inputs: Vec<Matrix>,
    /// Pre-activations of each layer; the last entry is the logits.
    pub pre: Vec<Matrix>,
    /// Inverted-dropout multipliers applied to each hidden activation.
    pub masks: Option<Vec<Matrix>>,
    pub probs: Matrix,
}

fn check_input(layers: &[LayerWeights], x: &Matrix) -> Result<()> {
    let first = layers
        .first()
        .ok_or_else(|| Error::Dimension("network has no layers".into()))?;
    if x.cols() != first.n_in() {
        return Err(Error::Dimension(format!(
            "input width {} but network expects {}",
            x.cols(),
            first.n_in()
        )));
    }
    Ok(())
}

fn affine(a: &Matrix, layer: &LayerWeights) -> Result<Matrix> {
    let mut z = a.matmul_nt(&layer.w)?;
    z.add_row_broadcast(&layer.b);
    Ok(z)
}

/// Forward pass keeping every intermediate. `masks`, when given, holds one
/// multiplier matrix per hidden layer.
pub fn forward_cached(layers: &[LayerWeights], x: &Matrix, masks: Option<Vec<Matrix>>) -> Result<MlpCache> {
    check_input(layers, x)?;
    let last = layers.len() - 1;
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut a = x.clone();
    for (l, layer) in layers.iter().enumerate() {
        let z = affine(&a, layer)?;
        inputs.push(a);
        if l < last {
            let mut h = z.map(|v| v.max(0.0));
            if let Some(ms) = &masks {
                for (v, m) in h.data_mut().iter_mut().zip(ms[l].data()) {
                    *v *= m;
                }
            }
            a = h;
        } else {
            a = Matrix::zeros(0, 0);
        }
        pre.push(z);
    }
    let probs = softmax_rows(&pre[last]);
    Ok(MlpCache {
        inputs,
        pre,
        masks,
        probs,
    })
}

/// Class probabilities for a batch.
pub fn forward(layers: &[LayerWeights], x: &Matrix) -> Result<Matrix> {
    Ok(softmax_rows(&logits(layers, x)?))
}

pub fn logits(layers: &[LayerWeights], x: &Matrix) -> Result<Matrix> {
    check_input(layers, x)?;
    let last = layers.len() - 1;
    let mut a = x.clone();
    for (l, layer) in layers.iter().enumerate() {
        let z = affine(&a, layer)?;
        a = if l < last { z.map(|v| v.max(0.0)) } else { z };
    }
    Ok(a)
}

const PREDICT_BLOCK: usize = 2048;

/// Argmax predictions, processed in fixed row blocks to bound memory.
pub fn predict(layers: &[LayerWeights], x: &Matrix) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(x.rows());
    let mut start = 0;
    while start < x.rows() {
        let end = (start + PREDICT_BLOCK).min(x.rows());
        let block = if start == 0 && end == x.rows() {
            logits(layers, x)?
        } else {
            logits(layers, &x.row_block(start, end))?
        };
        out.extend((0..block.rows()).map(|r| argmax(block.row(r))));
        start = end;
    }
    Ok(out)
}

/// Fraction of misclassified rows.
pub fn error_rate(layers: &[LayerWeights], x: &Matrix, y: &[usize]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty set".into()));
    }
    let wrong = predict(layers, x)?.iter().zip(y).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / y.len() as f64)
}

/// Backpropagates `grad_logits` (batch × classes) to weight gradients.
pub fn backward(layers: &[LayerWeights], cache: &MlpCache, grad_logits: &Matrix) -> Result<Vec<LayerWeights>> {
    let last = layers.len() - 1;
    if grad_logits.shape() != cache.pre[last].shape() {
        return Err(Error::Dimension(format!(
            "logit gradient {:?} but forward produced {:?}",
            grad_logits.shape(),
            cache.pre[last].shape()
        )));
    }
    let mut grads: Vec<LayerWeights> = Vec::with_capacity(layers.len());
    let mut delta = grad_logits.clone();
    for l in (0..layers.len()).rev() {
        let dw = delta.matmul_tn(&cache.inputs[l])?;
        let db = delta.column_sums();
        if l > 0 {
            let mut da = delta.matmul(&layers[l].w)?;
            let z = &cache.pre[l - 1];
            let mask = cache.masks.as_ref().map(|m| &m[l - 1]);
            for (i, v) in da.data_mut().iter_mut().enumerate() {
                let gate = if z.data()[i] > 0.0 { 1.0 } else { 0.0 };
                let keep = mask.map_or(1.0, |m| m.data()[i]);
                *v *= gate * keep;
            }
            delta = da;
        }
        grads.push(LayerWeights { w: dw, b: db });
    }
    grads.reverse();
    Ok(grads)
}

/// Inverted-dropout multipliers (0 or 1/(1-rate)) for each hidden layer.
pub fn dropout_masks(dims: &[usize], batch: usize, rate: f64, rng: &mut SeededRng) -> Vec<Matrix> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    dims[1..dims.len() - 1]
        .iter()
        .map(|&width| {
            let mut m = Matrix::zeros(batch, width);
            for v in m.data_mut() {
                *v = if rng.gen::<f64>() < keep { scale } else { 0.0 };
            }
            m
        })
        .collect()
}
