use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{standard_normal, Matrix};
use crate::rng::SeededRng;

/// Isotropic Gaussian class clusters with optional label noise. Used for
/// demos and tests where no real corpus is at hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n: usize,
    pub features: usize,
    pub classes: usize,
    /// Distance of each class centre from the origin, in noise standard deviations.
    pub separation: f64,
    /// Probability that a label is replaced by a uniformly drawn class.
    pub label_noise: f64,
}

pub fn gaussian_blobs(spec: &BlobSpec, seed: u64) -> Result<Dataset> {
    if spec.classes < 2 || spec.features == 0 || spec.n < 2 * spec.classes {
        return Err(Error::Config(format!("degenerate blob spec {spec:?}")));
    }
    if !(0.0..=1.0).contains(&spec.label_noise) {
        return Err(Error::Config("label_noise must lie in [0, 1]".into()));
    }
    let root = SeededRng::new(seed);
    let mut centre_rng = root.child("centres");
    let centres: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            let v = standard_normal(&mut centre_rng, spec.features);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
            v.iter().map(|a| a / norm * spec.separation).collect()
        })
        .collect();
    let mut rng = root.child("points");
    let mut data = Vec::with_capacity(spec.n * spec.features);
    let mut y = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        // Round-robin classes so every class is present.
        let c = i % spec.classes;
        let noise = standard_normal(&mut rng, spec.features);
        data.extend(centres[c].iter().zip(noise).map(|(m, e)| m + e));
        let label = if rng.gen::<f64>() < spec.label_noise {
            rng.gen_range(0..spec.classes)
        } else {
            c
        };
        y.push(label);
    }
    Dataset::new("blobs", Matrix::from_vec(spec.n, spec.features, data)?, y, spec.classes)
}
