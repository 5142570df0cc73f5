//! Independent reference computations shared by the integration tests and
//! the acceptance report.

#![allow(dead_code)]

use pbcert::losses::{bounded_xe, bounded_xe_grad, LossConfig};
use pbcert::model::{Center, Gradients, PriorRef, ProbNetwork};
use pbcert::numeric::{softmax, softplus, standard_normal};
use pbcert::{Matrix, SeededRng};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

pub struct OracleRow {
    pub q: f64,
    pub c: f64,
    pub p: f64,
    pub kl_q_p: Option<f64>,
    pub kl_inverse: f64,
}

/// Rows of `tests/data/kl_oracle.csv`, computed at 30 significant digits.
pub fn kl_oracle() -> Vec<OracleRow> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/kl_oracle.csv");
    let mut reader = csv::Reader::from_path(path).expect("oracle table present");
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            OracleRow {
                q: f(0),
                c: f(1),
                p: f(2),
                kl_q_p: (!r[3].is_empty()).then(|| f(3)),
                kl_inverse: f(4),
            }
        })
        .collect()
}

/// Worked certificate: mc 0.02, KL 10, n_cert 1840, m 150000, δ 0.025, δ' 0.01.
pub const CERT_EXAMPLE_EMP: f64 = 0.021_199_394_355_625_162;
pub const CERT_EXAMPLE_RISK: f64 = 0.048_016_215_898_377_51;

/// ‖a − b‖ / max(‖a‖, ‖b‖, floor).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

fn flatten(g: &Gradients) -> Vec<f64> {
    g.slices().into_iter().flatten().copied().collect()
}

fn central_difference(net: &ProbNetwork, f: impl Fn(&ProbNetwork) -> f64) -> Vec<f64> {
    let sizes: Vec<usize> = net.clone().param_slices_mut().iter().map(|s| s.len()).collect();
    let mut out = Vec::new();
    for (block, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let mut up = net.clone();
            up.param_slices_mut()[block][i] += FD_STEP;
            let mut dn = net.clone();
            dn.param_slices_mut()[block][i] -= FD_STEP;
            out.push((f(&up) - f(&dn)) / (2.0 * FD_STEP));
        }
    }
    out
}

/// A random small network whose means and scales are both spread out.
pub fn random_network(dims: &[usize], rng: &mut SeededRng) -> ProbNetwork {
    let sigma0 = rng.gen_range(0.05..0.5);
    let mut net = ProbNetwork::init(dims, sigma0, rng, Center::Random).unwrap();
    let jitter: Vec<Vec<f64>> = net
        .clone()
        .param_slices_mut()
        .iter()
        .map(|s| standard_normal(rng, s.len()))
        .collect();
    for (block, (s, j)) in net.param_slices_mut().into_iter().zip(jitter).enumerate() {
        // Blocks cycle through μ_w, ρ_w, μ_b, ρ_b.
        let scale = if block % 2 == 0 { 0.5 } else { 0.3 };
        for (v, e) in s.iter_mut().zip(j) {
            *v += scale * e;
        }
    }
    net
}

/// Pathwise gradient of `Σ w ⊙ probs` under fixed noise against central
/// differences. Returns the relative error.
pub fn pathwise_fd_error(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let net = random_network(&[3, 4, 2], &mut rng);
    let x = Matrix::from_vec(3, 3, standard_normal(&mut rng, 9)).unwrap();
    let upstream = Matrix::from_vec(3, 2, standard_normal(&mut rng, 6)).unwrap();
    let noise = net.sample_noise(&mut rng);
    let objective = |n: &ProbNetwork| -> f64 {
        let (p, _) = n.forward_with_noise(&x, noise.clone(), None).unwrap();
        p.data().iter().zip(upstream.data()).map(|(a, b)| a * b).sum()
    };
    let (_, cache) = net.forward_with_noise(&x, noise.clone(), None).unwrap();
    let analytic = flatten(&net.pathwise_backward(&cache, &upstream).unwrap());
    relative_error(&analytic, &central_difference(&net, objective))
}

/// Closed-form KL gradient against central differences of `kl_to_prior`.
pub fn kl_gradient_fd_error(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let net = random_network(&[3, 4, 2], &mut rng);
    let prior = PriorRef::from_network(&random_network(&[3, 4, 2], &mut rng), 0.1);
    let analytic = flatten(&net.kl_gradient(&prior).unwrap());
    relative_error(&analytic, &central_difference(&net, |n| n.kl_to_prior(&prior).unwrap()))
}

/// Bounded cross-entropy logit gradient against central differences.
pub fn bounded_xe_fd_error(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let cfg = LossConfig::default();
    let k = rng.gen_range(2..6);
    let logits = standard_normal(&mut rng, k);
    let label = rng.gen_range(0..k);
    let analytic = bounded_xe_grad(&softmax(&logits), label, &cfg).unwrap();
    let fd: Vec<f64> = (0..k)
        .map(|j| {
            let mut up = logits.clone();
            up[j] += FD_STEP;
            let mut dn = logits.clone();
            dn[j] -= FD_STEP;
            (bounded_xe(&softmax(&up), label, &cfg).unwrap() - bounded_xe(&softmax(&dn), label, &cfg).unwrap())
                / (2.0 * FD_STEP)
        })
        .collect();
    relative_error(&analytic, &fd)
}

/// `∫ q log(q/p)` for two univariate Gaussians by composite Simpson over
/// `μ₁ ± 16σ₁`, with the log-ratio taken in closed form.
pub fn kl_by_quadrature(mu1: f64, s1: f64, mu0: f64, s0: f64) -> f64 {
    let n = 40_000;
    let (a, b) = (mu1 - 16.0 * s1, mu1 + 16.0 * s1);
    let h = (b - a) / n as f64;
    let f = |x: f64| {
        let z1 = (x - mu1) / s1;
        let z0 = (x - mu0) / s0;
        let log_q = -0.5 * z1 * z1 - s1.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        let log_ratio = -0.5 * z1 * z1 - s1.ln() + 0.5 * z0 * z0 + s0.ln();
        log_q.exp() * log_ratio
    };
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// `(|closed − quadrature|, closed, quadrature)` on a random network with
/// 10 weight coordinates.
pub fn kl_quadrature_error(seed: u64) -> (f64, f64, f64) {
    let mut rng = SeededRng::new(seed);
    let dims = [1, 2, 2];
    let q = random_network(&dims, &mut rng);
    let p = random_network(&dims, &mut rng);
    assert_eq!(q.num_coords(), 10);
    let prior = PriorRef::from_network(&p, 0.1);
    let closed = q.kl_to_prior(&prior).unwrap();
    let mut quad = 0.0;
    for (lq, lp) in q.layers().iter().zip(p.layers()) {
        let qs = lq
            .mu_w
            .data()
            .iter()
            .chain(&lq.mu_b)
            .zip(lq.rho_w.data().iter().chain(&lq.rho_b));
        let ps = lp
            .mu_w
            .data()
            .iter()
            .chain(&lp.mu_b)
            .zip(lp.rho_w.data().iter().chain(&lp.rho_b));
        for ((m1, r1), (m0, r0)) in qs.zip(ps) {
            quad += kl_by_quadrature(*m1, softplus(*r1), *m0, softplus(*r0));
        }
    }
    ((closed - quad).abs(), closed, quad)
}

/// First-layer pre-activations averaged over `draws` weight samples,
/// compared with the mean network. Returns the largest deviation in
/// standard errors.
pub fn preactivation_mean_z(seed: u64, draws: usize) -> f64 {
    let mut rng = SeededRng::new(seed);
    let net = random_network(&[4, 3, 2], &mut rng);
    let x = Matrix::from_vec(1, 4, standard_normal(&mut rng, 4)).unwrap();
    let layer = &net.layers()[0];
    let width = layer.n_out();
    let mut sum = vec![0.0; width];
    for _ in 0..draws {
        let (_, cache) = net.sample_forward(&x, &mut rng).unwrap();
        for (s, v) in sum.iter_mut().zip(cache.mlp.pre[0].row(0)) {
            *s += v;
        }
    }
    let sp = softplus;
    (0..width)
        .map(|j| {
            let mean: f64 = layer.mu_b[j] + (0..4).map(|i| layer.mu_w.get(j, i) * x.get(0, i)).sum::<f64>();
            let var: f64 = sp(layer.rho_b[j]).powi(2)
                + (0..4)
                    .map(|i| (sp(layer.rho_w.get(j, i)) * x.get(0, i)).powi(2))
                    .sum::<f64>();
            let se = (var / draws as f64).sqrt();
            ((sum[j] / draws as f64 - mean) / se).abs()
        })
        .fold(0.0, f64::max)
}
