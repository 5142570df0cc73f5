use super::Objective;
use crate::certify::{quad_bound_value, quad_form};
use crate::error::{Error, Result};
use crate::losses::{batch_bounded_xe, LossConfig};
use crate::model::{Gradients, PriorRef, ProbNetwork};
use crate::numeric::Matrix;
use crate::rng::SeededRng;

/// `(√(emp + B) + √B)²` with `B = (kl + log(2√n/δ))/(2n)`.
pub fn objective_quad_value(emp: f64, kl: f64, n: usize, delta: f64) -> Result<f64> {
    quad_bound_value(emp, kl, n, delta)
}

/// Value and partial derivatives of a stochastic objective in its two inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepObjective {
    pub value: f64,
    pub emp: f64,
    pub kl: f64,
    pub d_emp: f64,
    pub d_kl: f64,
}

/// Evaluates `bbb`, `quad_prior` or `quad_posterior` at `(emp, kl)`.
/// `eta` scales the KL (1 for the posterior objective).
pub fn objective_coefficients(
    objective: Objective,
    emp: f64,
    kl: f64,
    n: usize,
    eta: f64,
    delta: f64,
) -> Result<StepObjective> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if !kl.is_finite() || !emp.is_finite() {
        return Err(Error::Numeric(format!("objective inputs emp={emp}, kl={kl}")));
    }
    let nf = n as f64;
    let (value, d_emp, d_kl) = match objective {
        Objective::Bbb => (emp + eta * kl / nf, 1.0, eta / nf),
        Objective::QuadPrior | Objective::QuadPosterior => {
            let b = (eta * kl + (2.0 * nf.sqrt() / delta).ln()) / (2.0 * nf);
            let s1 = (emp + b).sqrt();
            let s2 = b.sqrt();
            let d_b = (s1 + s2) * (1.0 / s1 + 1.0 / s2);
            (quad_form(emp, b), (s1 + s2) / s1, d_b * eta / (2.0 * nf))
        }
        other => return Err(Error::Config(format!("{} is not a stochastic objective", other.name()))),
    };
    Ok(StepObjective {
        value,
        emp,
        kl,
        d_emp,
        d_kl,
    })
}

/// One-sample objective and its gradient on the batch `(x, y)`.
#[allow(clippy::too_many_arguments)]
pub fn objective_gradients(
    net: &ProbNetwork,
    reference: &PriorRef,
    x: &Matrix,
    y: &[usize],
    objective: Objective,
    n: usize,
    eta: f64,
    delta: f64,
    loss: &LossConfig,
    noise_rng: &mut SeededRng,
) -> Result<(StepObjective, Gradients)> {
    let (probs, cache) = net.sample_forward(x, noise_rng)?;
    let (emp, grad_logits) = batch_bounded_xe(&probs, y, loss)?;
    let kl = net.kl_to_prior(reference)?;
    let step = objective_coefficients(objective, emp, kl, n, eta, delta)?;
    let mut grads = net.pathwise_backward_logits(&cache, &grad_logits)?;
    grads.scale(step.d_emp);
    grads.add_scaled(step.d_kl, &net.kl_gradient(reference)?);
    Ok((step, grads))
}
