//! Probabilistic fully-connected networks with diagonal Gaussian weights.
//!
//! Each coordinate `w` of every weight matrix and bias vector follows
//! `N(μ, σ²)` with `σ = softplus(ρ)`. Sampling uses the pathwise map
//! `W = μ + σ ⊙ V` with `V ~ N(0, I)`, so gradients of a sampled loss flow
//! to `μ` directly and to `ρ` through `V · sigmoid(ρ)`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{self, LayerWeights, MlpCache};
use crate::numeric::{inverse_softplus, sigmoid, softplus, standard_normal, trunc_normal, Matrix};
use crate::rng::SeededRng;

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn fresh_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Mean and pre-scale parameters of one Gaussian affine layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLayerParams {
    pub mu_w: Matrix,
    pub rho_w: Matrix,
    pub mu_b: Vec<f64>,
    pub rho_b: Vec<f64>,
}

impl GaussianLayerParams {
    fn check(&self) -> Result<()> {
        if self.mu_w.shape() != self.rho_w.shape()
            || self.mu_b.len() != self.rho_b.len()
            || self.mu_b.len() != self.mu_w.rows()
        {
            return Err(Error::Dimension("μ and ρ shapes differ".into()));
        }
        Ok(())
    }

    pub fn n_in(&self) -> usize {
        self.mu_w.cols()
    }

    pub fn n_out(&self) -> usize {
        self.mu_w.rows()
    }

    pub fn num_coords(&self) -> usize {
        self.mu_b.len() * (self.n_in() + 1)
    }

    fn mean(&self) -> LayerWeights {
        LayerWeights {
            w: self.mu_w.clone(),
            b: self.mu_b.clone(),
        }
    }

    /// Iterates `(μ, ρ)` over weights then biases.
    fn coords(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.mu_w
            .data()
            .iter()
            .copied()
            .zip(self.rho_w.data().iter().copied())
            .chain(self.mu_b.iter().copied().zip(self.rho_b.iter().copied()))
    }
}

/// Where the means of a freshly built network sit.
#[derive(Clone, Debug)]
pub enum Center {
    /// Truncated normal with std `1/√n_in`, cut at ±2 std; biases zero.
    Random,
    Zero,
    Given(Vec<LayerWeights>),
}

/// Standard-normal noise for one layer; shapes mirror the layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNoise {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// Everything a sampled forward pass needs to be replayed or differentiated.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    pub noise: Vec<LayerNoise>,
    pub weights: Vec<LayerWeights>,
    pub mlp: MlpCache,
}

impl ForwardCache {
    pub fn probs(&self) -> &Matrix {
        &self.mlp.probs
    }
}

/// Gradients with respect to `μ` and `ρ` of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub dmu_w: Matrix,
    pub drho_w: Matrix,
    pub dmu_b: Vec<f64>,
    pub drho_b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

impl Gradients {
    pub fn zeros_like(net: &ProbNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    dmu_w: Matrix::zeros(l.n_out(), l.n_in()),
                    drho_w: Matrix::zeros(l.n_out(), l.n_in()),
                    dmu_b: vec![0.0; l.n_out()],
                    drho_b: vec![0.0; l.n_out()],
                })
                .collect(),
        }
    }

    /// Flat views in `[μ_w, ρ_w, μ_b, ρ_b]` order per layer, matching
    /// [`ProbNetwork::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.dmu_w.data(), l.drho_w.data(), l.dmu_b.as_slice(), l.drho_b.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.dmu_w.data_mut(),
                    l.drho_w.data_mut(),
                    l.dmu_b.as_mut_slice(),
                    l.drho_b.as_mut_slice(),
                ]
            })
            .collect()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Gradients) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for dst in self.slices_mut() {
            for d in dst.iter_mut() {
                *d *= alpha;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&v| v == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Frozen Gaussian reference distribution used in the KL term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorRef {
    layers: Vec<GaussianLayerParams>,
    sigma0: f64,
}

impl PriorRef {
    pub fn from_network(net: &ProbNetwork, sigma0: f64) -> Self {
        Self {
            layers: net.layers.clone(),
            sigma0,
        }
    }

    pub fn layers(&self) -> &[GaussianLayerParams] {
        &self.layers
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn dims(&self) -> Vec<usize> {
        dims_from_layers(&self.layers)
    }

    /// A trainable network that starts exactly at this distribution.
    pub fn to_network(&self) -> ProbNetwork {
        ProbNetwork {
            layers: self.layers.clone(),
            version: fresh_version(),
        }
    }
}

fn dims_from_layers(layers: &[GaussianLayerParams]) -> Vec<usize> {
    let mut dims = Vec::with_capacity(layers.len() + 1);
    if let Some(first) = layers.first() {
        dims.push(first.n_in());
    }
    dims.extend(layers.iter().map(GaussianLayerParams::n_out));
    dims
}

/// A stack of Gaussian affine layers with ReLU hidden units and softmax output.
#[derive(Debug)]
pub struct ProbNetwork {
    layers: Vec<GaussianLayerParams>,
    version: u64,
}

impl Clone for ProbNetwork {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            version: self.version,
        }
    }
}

impl PartialEq for ProbNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl ProbNetwork {
    /// Builds a network over `dims = [input, hidden..., classes]` with every
    /// `softplus(ρ)` equal to `sigma0`.
    pub fn init(dims: &[usize], sigma0: f64, rng: &mut SeededRng, center: Center) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0 <= 1.0) {
            return Err(Error::Parameter(format!("sigma0 must lie in (0, 1], got {sigma0}")));
        }
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Dimension(format!("bad layer widths {dims:?}")));
        }
        let rho = inverse_softplus(sigma0);
        let means: Vec<LayerWeights> = match center {
            Center::Zero => dims.windows(2).map(|w| LayerWeights::zeros(w[0], w[1])).collect(),
            Center::Random => dims
                .windows(2)
                .map(|w| {
                    let std = 1.0 / (w[0] as f64).sqrt();
                    LayerWeights {
                        w: Matrix::from_vec(w[1], w[0], trunc_normal(rng, w[0] * w[1], std))
                            .expect("sized by construction"),
                        b: vec![0.0; w[1]],
                    }
                })
                .collect(),
            Center::Given(weights) => {
                if mlp::dims_of(&weights) != dims {
                    return Err(Error::Dimension(format!(
                        "given weights have widths {:?}, expected {dims:?}",
                        mlp::dims_of(&weights)
                    )));
                }
                weights
            }
        };
        let layers = means
            .into_iter()
            .map(|m| GaussianLayerParams {
                rho_w: Matrix::filled(m.w.rows(), m.w.cols(), rho),
                rho_b: vec![rho; m.b.len()],
                mu_w: m.w,
                mu_b: m.b,
            })
            .collect();
        Ok(Self {
            layers,
            version: fresh_version(),
        })
    }

    pub fn from_layers(layers: Vec<GaussianLayerParams>) -> Result<Self> {
        for l in &layers {
            l.check()?;
        }
        for pair in layers.windows(2) {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(Error::Dimension("adjacent layer widths do not chain".into()));
            }
        }
        if layers.is_empty() {
            return Err(Error::Dimension("network has no layers".into()));
        }
        Ok(Self {
            layers,
            version: fresh_version(),
        })
    }

    pub fn layers(&self) -> &[GaussianLayerParams] {
        &self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        dims_from_layers(&self.layers)
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, GaussianLayerParams::n_out)
    }

    /// Number of Gaussian coordinates (weights plus biases).
    pub fn num_coords(&self) -> usize {
        self.layers.iter().map(GaussianLayerParams::num_coords).sum()
    }

    /// Token identifying the current parameter values; changes on every update.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Flat mutable views in `[μ_w, ρ_w, μ_b, ρ_b]` order per layer.
    /// Taking them counts as a mutation.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.version = fresh_version();
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.mu_w.data_mut(),
                    l.rho_w.data_mut(),
                    l.mu_b.as_mut_slice(),
                    l.rho_b.as_mut_slice(),
                ]
            })
            .collect()
    }

    /// The deterministic network at the distribution mean.
    pub fn mean_weights(&self) -> Vec<LayerWeights> {
        self.layers.iter().map(GaussianLayerParams::mean).collect()
    }

    pub fn sample_noise(&self, rng: &mut SeededRng) -> Vec<LayerNoise> {
        self.layers
            .iter()
            .map(|l| LayerNoise {
                w: Matrix::from_vec(l.n_out(), l.n_in(), standard_normal(rng, l.n_out() * l.n_in()))
                    .expect("sized by construction"),
                b: standard_normal(rng, l.n_out()),
            })
            .collect()
    }

    /// `W = μ + softplus(ρ) ⊙ V` for the given noise.
    pub fn realize(&self, noise: &[LayerNoise]) -> Result<Vec<LayerWeights>> {
        if noise.len() != self.layers.len() {
            return Err(Error::Dimension("noise does not match layer count".into()));
        }
        self.layers
            .iter()
            .zip(noise)
            .map(|(l, v)| {
                if v.w.shape() != l.mu_w.shape() || v.b.len() != l.mu_b.len() {
                    return Err(Error::Dimension("noise does not match layer shape".into()));
                }
                let mut w = l.mu_w.clone();
                for ((w, r), e) in w.data_mut().iter_mut().zip(l.rho_w.data()).zip(v.w.data()) {
                    *w += softplus(*r) * e;
                }
                let b = l
                    .mu_b
                    .iter()
                    .zip(&l.rho_b)
                    .zip(&v.b)
                    .map(|((m, r), e)| m + softplus(*r) * e)
                    .collect();
                Ok(LayerWeights { w, b })
            })
            .collect()
    }

    pub fn sample_weights(&self, rng: &mut SeededRng) -> Vec<LayerWeights> {
        let noise = self.sample_noise(rng);
        self.realize(&noise).expect("noise sampled from this network")
    }

    /// One weight draw applied to the whole batch `x`.
    pub fn sample_forward(&self, x: &Matrix, rng: &mut SeededRng) -> Result<(Matrix, ForwardCache)> {
        let noise = self.sample_noise(rng);
        self.forward_with_noise(x, noise, None)
    }

    /// Forward pass under explicit noise; hidden dropout multipliers are optional.
    pub fn forward_with_noise(
        &self,
        x: &Matrix,
        noise: Vec<LayerNoise>,
        masks: Option<Vec<Matrix>>,
    ) -> Result<(Matrix, ForwardCache)> {
        let weights = self.realize(&noise)?;
        let cache = mlp::forward_cached(&weights, x, masks)?;
        let probs = cache.probs.clone();
        Ok((
            probs,
            ForwardCache {
                version: self.version,
                noise,
                weights,
                mlp: cache,
            },
        ))
    }

    pub fn mean_forward(&self, x: &Matrix) -> Result<Matrix> {
        mlp::forward(&self.mean_weights(), x)
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::Contract(
                "forward cache was produced before the last parameter update".into(),
            ));
        }
        Ok(())
    }

    /// Pathwise gradients given `dL/dprobs` for each row of the cached batch.
    pub fn pathwise_backward(&self, cache: &ForwardCache, grad_probs: &Matrix) -> Result<Gradients> {
        let probs = &cache.mlp.probs;
        if grad_probs.shape() != probs.shape() {
            return Err(Error::Dimension(format!(
                "probability gradient {:?} but forward produced {:?}",
                grad_probs.shape(),
                probs.shape()
            )));
        }
        // Softmax Jacobian: dz_j = p_j (g_j - Σ_k g_k p_k).
        let mut grad_logits = grad_probs.clone();
        for r in 0..probs.rows() {
            let p = probs.row(r);
            let g = grad_logits.row_mut(r);
            let dot: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
            for (gj, pj) in g.iter_mut().zip(p) {
                *gj = pj * (*gj - dot);
            }
        }
        self.pathwise_backward_logits(cache, &grad_logits)
    }

    /// Pathwise gradients given `dL/dlogits`.
    pub fn pathwise_backward_logits(&self, cache: &ForwardCache, grad_logits: &Matrix) -> Result<Gradients> {
        self.check_cache(cache)?;
        let dw = mlp::backward(&cache.weights, &cache.mlp, grad_logits)?;
        let layers = self
            .layers
            .iter()
            .zip(dw)
            .zip(&cache.noise)
            .map(|((l, g), v)| {
                let mut drho_w = g.w.clone();
                for ((d, e), r) in drho_w.data_mut().iter_mut().zip(v.w.data()).zip(l.rho_w.data()) {
                    *d *= e * sigmoid(*r);
                }
                let drho_b =
                    g.b.iter()
                        .zip(&v.b)
                        .zip(&l.rho_b)
                        .map(|((d, e), r)| d * e * sigmoid(*r))
                        .collect();
                LayerGradients {
                    dmu_w: g.w,
                    drho_w,
                    dmu_b: g.b,
                    drho_b,
                }
            })
            .collect();
        Ok(Gradients { layers })
    }

    fn check_prior(&self, prior: &PriorRef) -> Result<()> {
        if self.dims() != prior.dims() {
            return Err(Error::Dimension(format!(
                "network widths {:?} differ from prior widths {:?}",
                self.dims(),
                prior.dims()
            )));
        }
        Ok(())
    }

    /// `KL(Q ‖ Q⁰)` between this network's distribution and the prior.
    pub fn kl_to_prior(&self, prior: &PriorRef) -> Result<f64> {
        self.check_prior(prior)?;
        let mut total = 0.0;
        for (q, p) in self.layers.iter().zip(&prior.layers) {
            for ((mu1, rho1), (mu0, rho0)) in q.coords().zip(p.coords()) {
                total += gaussian_kl(mu1, softplus(rho1), mu0, softplus(rho0));
            }
        }
        Ok(total)
    }

    /// Closed-form gradient of [`kl_to_prior`](Self::kl_to_prior) w.r.t. `μ` and `ρ`.
    pub fn kl_gradient(&self, prior: &PriorRef) -> Result<Gradients> {
        self.check_prior(prior)?;
        let mut grads = Gradients::zeros_like(self);
        for ((q, p), g) in self.layers.iter().zip(&prior.layers).zip(&mut grads.layers) {
            let dmu = g.dmu_w.data_mut().iter_mut().chain(g.dmu_b.iter_mut());
            let drho = g.drho_w.data_mut().iter_mut().chain(g.drho_b.iter_mut());
            for ((((mu1, rho1), (mu0, rho0)), dm), dr) in q.coords().zip(p.coords()).zip(dmu).zip(drho) {
                let s1 = softplus(rho1);
                let s0 = softplus(rho0);
                let var0 = s0 * s0;
                *dm = (mu1 - mu0) / var0;
                *dr = (s1 / var0 - 1.0 / s1) * sigmoid(rho1);
            }
        }
        Ok(grads)
    }
}

/// `KL(N(μ₁, σ₁²) ‖ N(μ₀, σ₀²))` for one coordinate, floored at zero.
pub fn gaussian_kl(mu1: f64, sigma1: f64, mu0: f64, sigma0: f64) -> f64 {
    let d = mu1 - mu0;
    let kl = (sigma0 / sigma1).ln() + (sigma1 * sigma1 + d * d) / (2.0 * sigma0 * sigma0) - 0.5;
    kl.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn net(dims: &[usize], sigma0: f64, seed: u64, center: Center) -> ProbNetwork {
        ProbNetwork::init(dims, sigma0, &mut SeededRng::new(seed), center).unwrap()
    }

    #[test]
    fn zero_center_gives_uniform_predictions() {
        let n = net(&[3, 5, 4], 0.1, 0, Center::Zero);
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.0, 0.5, 9.0]]).unwrap();
        let p = n.mean_forward(&x).unwrap();
        assert!(p.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn sigma_is_exact_after_init() {
        let n = net(&[4, 3, 2], 0.01, 1, Center::Random);
        for l in n.layers() {
            for (_, rho) in l.coords() {
                assert_abs_diff_eq!(softplus(rho), 0.01, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn random_center_respects_two_sigma_cut() {
        let n = net(&[562, 100, 100, 6], 0.03, 2, Center::Random);
        let bound = 2.0 / 562f64.sqrt();
        assert!(n.layers()[0].mu_w.data().iter().all(|v| v.abs() <= bound));
        assert!(n.layers()[0].mu_b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_sigma0() {
        let mut rng = SeededRng::new(0);
        for s in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                ProbNetwork::init(&[2, 2], s, &mut rng, Center::Zero),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn vanishing_sigma_matches_mean() {
        let mut n = net(&[3, 6, 2], 0.1, 3, Center::Random);
        for s in n.param_slices_mut().into_iter().skip(1).step_by(2) {
            s.iter_mut().for_each(|r| *r = -200.0);
        }
        let x = Matrix::from_rows(&[vec![0.3, -1.0, 2.0]]).unwrap();
        let (p, _) = n.sample_forward(&x, &mut SeededRng::new(8)).unwrap();
        let m = n.mean_forward(&x).unwrap();
        for (a, b) in p.data().iter().zip(m.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_noise_equals_mean_and_replay_is_exact() {
        let n = net(&[3, 4, 2], 0.1, 4, Center::Random);
        let x = Matrix::from_rows(&[vec![0.3, -1.0, 2.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let zero: Vec<LayerNoise> = n
            .layers()
            .iter()
            .map(|l| LayerNoise {
                w: Matrix::zeros(l.n_out(), l.n_in()),
                b: vec![0.0; l.n_out()],
            })
            .collect();
        let (p, _) = n.forward_with_noise(&x, zero, None).unwrap();
        assert_eq!(p, n.mean_forward(&x).unwrap());

        let (p1, cache) = n.sample_forward(&x, &mut SeededRng::new(5)).unwrap();
        let (p2, _) = n.forward_with_noise(&x, cache.noise.clone(), None).unwrap();
        assert_eq!(p1, p2);
        let (p3, _) = n.sample_forward(&x, &mut SeededRng::new(5)).unwrap();
        assert_eq!(p1, p3);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut n = net(&[2, 3, 2], 0.1, 6, Center::Random);
        let x = Matrix::row_vector(&[1.0, 2.0]);
        let (_, cache) = n.sample_forward(&x, &mut SeededRng::new(0)).unwrap();
        n.param_slices_mut()[0][0] += 0.1;
        let g = Matrix::zeros(1, 2);
        assert!(matches!(n.pathwise_backward(&cache, &g), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_upstream_and_zero_noise_cases() {
        let n = net(&[3, 4, 2], 0.1, 7, Center::Random);
        let x = Matrix::row_vector(&[0.3, -1.0, 2.0]);
        let (_, cache) = n.sample_forward(&x, &mut SeededRng::new(1)).unwrap();
        assert!(n.pathwise_backward(&cache, &Matrix::zeros(1, 2)).unwrap().is_zero());

        let zero: Vec<LayerNoise> = cache
            .noise
            .iter()
            .map(|v| LayerNoise {
                w: Matrix::zeros(v.w.rows(), v.w.cols()),
                b: vec![0.0; v.b.len()],
            })
            .collect();
        let (_, cache) = n.forward_with_noise(&x, zero, None).unwrap();
        let g = n.pathwise_backward(&cache, &Matrix::row_vector(&[1.0, -0.5])).unwrap();
        for l in &g.layers {
            assert!(l.drho_w.data().iter().all(|&v| v == 0.0));
            assert!(l.drho_b.iter().all(|&v| v == 0.0));
        }
        assert!(g.max_abs() > 0.0);
    }

    #[test]
    fn kl_closed_forms() {
        let n = net(&[5, 3, 2], 0.05, 8, Center::Random);
        let prior = PriorRef::from_network(&n, 0.05);
        assert_eq!(n.kl_to_prior(&prior).unwrap(), 0.0);
        assert!(n.kl_gradient(&prior).unwrap().is_zero());

        assert_abs_diff_eq!(gaussian_kl(1.0, 1.0, 0.0, 1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kl_gradient_single_coordinate() {
        let rho = inverse_softplus(1.0);
        let prior = PriorRef {
            layers: vec![GaussianLayerParams {
                mu_w: Matrix::zeros(1, 1),
                rho_w: Matrix::filled(1, 1, rho),
                mu_b: vec![0.0],
                rho_b: vec![rho],
            }],
            sigma0: 1.0,
        };
        let mut n = prior.to_network();
        n.param_slices_mut()[0][0] = 1.0;
        let g = n.kl_gradient(&prior).unwrap();
        assert_abs_diff_eq!(g.layers[0].dmu_w.get(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.kl_to_prior(&prior).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn prior_shape_mismatch() {
        let a = net(&[3, 4, 2], 0.1, 0, Center::Zero);
        let b = net(&[3, 5, 2], 0.1, 0, Center::Zero);
        let prior = PriorRef::from_network(&b, 0.1);
        assert!(matches!(a.kl_to_prior(&prior), Err(Error::Dimension(_))));
    }
}
