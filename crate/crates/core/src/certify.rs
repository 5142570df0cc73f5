//! Risk certificates for stochastic predictors.
//!
//! The certificate is computed in two stages. A Monte-Carlo average of the
//! 0-1 error over `m` weight draws is first converted into an upper bound on
//! the true empirical error of the randomized predictor on the certification
//! set (a sample-convergence step at confidence `δ'`). That bound is then
//! pushed through the PAC-Bayes-kl inequality at confidence `δ`. Both steps
//! invert the binary KL divergence numerically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mlp;
use crate::model::{PriorRef, ProbNetwork};
use crate::rng::SeededRng;

pub const DEFAULT_MC_SAMPLES: usize = 150_000;
pub const DEFAULT_DELTA: f64 = 0.025;
pub const DEFAULT_DELTA_PRIME: f64 = 0.01;

const BISECTION_TOL: f64 = 1e-9;
const BISECTION_MAX_ITERS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub kl_value: f64,
    pub n_cert: usize,
    pub m: usize,
    pub delta: f64,
    pub delta_prime: f64,
}

impl BoundInputs {
    pub fn new(kl_value: f64, n_cert: usize, m: usize, delta: f64, delta_prime: f64) -> Result<Self> {
        let b = Self {
            kl_value,
            n_cert,
            m,
            delta,
            delta_prime,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) || !(self.delta_prime > 0.0 && self.delta_prime < 1.0) {
            return Err(Error::Parameter(format!(
                "confidence levels must lie in (0, 1): δ={}, δ'={}",
                self.delta, self.delta_prime
            )));
        }
        if self.n_cert == 0 || self.m == 0 {
            return Err(Error::Parameter("n_cert and m must be at least 1".into()));
        }
        if !self.kl_value.is_finite() {
            return Err(Error::Numeric(format!("KL is {}", self.kl_value)));
        }
        if self.kl_value < 0.0 {
            return Err(Error::Parameter(format!(
                "KL must be non-negative, got {}",
                self.kl_value
            )));
        }
        Ok(())
    }

    /// Budget of the Monte-Carlo stage: `log(2/δ')/m`.
    pub fn sample_budget(&self) -> f64 {
        (2.0 / self.delta_prime).ln() / self.m as f64
    }

    /// Budget of the PAC-Bayes stage: `(KL + log(2√n/δ))/n`.
    pub fn pac_bayes_budget(&self) -> f64 {
        let n = self.n_cert as f64;
        (self.kl_value + (2.0 * n.sqrt() / self.delta).ln()) / n
    }
}

/// Certificate confidence settings shared by every run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub m: usize,
    pub delta: f64,
    pub delta_prime: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_MC_SAMPLES,
            delta: DEFAULT_DELTA,
            delta_prime: DEFAULT_DELTA_PRIME,
        }
    }
}

impl CertifyConfig {
    pub fn validate(&self) -> Result<()> {
        BoundInputs::new(0.0, 1, self.m, self.delta, self.delta_prime).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub risk_bound: f64,
    pub mc_estimate: f64,
    pub emp_bound: f64,
    pub kl_per_n: f64,
    pub inputs: BoundInputs,
}

impl Certificate {
    /// `mc_estimate ≤ emp_bound ≤ risk_bound ≤ 1`.
    pub fn chain_holds(&self) -> bool {
        self.mc_estimate <= self.emp_bound && self.emp_bound <= self.risk_bound && self.risk_bound <= 1.0
    }
}

/// Certificate plus provenance, as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    #[serde(flatten)]
    pub certificate: Certificate,
    pub config_hash: String,
    pub seed: u64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// `kl(q ‖ p)` between Bernoulli(q) and Bernoulli(p).
pub fn binary_kl(q: f64, p: f64) -> Result<f64> {
    check_unit("q", q)?;
    check_unit("p", p)?;
    let term = |a: f64, b: f64| -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    Ok((term(q, p) + term(1.0 - q, 1.0 - p)).max(0.0))
}

/// `sup { p ∈ [q, 1] : kl(q ‖ p) ≤ c }` by bisection.
///
/// Bisection runs until the bracket stops shrinking in floating point (at
/// least to width 1e-9, at most 200 halvings) and returns the upper end, so
/// the result never understates the supremum.
pub fn kl_inverse(q: f64, c: f64) -> Result<f64> {
    check_unit("q", q)?;
    if !(c >= 0.0) {
        return Err(Error::Domain(format!("KL budget must be non-negative, got {c}")));
    }
    if c == 0.0 || q == 1.0 {
        return Ok(q);
    }
    if c.is_infinite() {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (q, 1.0);
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_kl(q, mid)? > c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    debug_assert!(hi - lo <= BISECTION_TOL);
    Ok(hi)
}

/// Mean over `m` weight draws of the 0-1 error on `cert_set`.
///
/// Draw `i` uses the child stream `("mc-draw", i)` of `rng`, and the per-draw
/// errors are summed in draw order, so the estimate does not depend on how
/// the draws are scheduled across threads.
pub fn mc_empirical_error(net: &ProbNetwork, cert_set: &Dataset, m: usize, rng: &SeededRng) -> Result<f64> {
    if cert_set.is_empty() {
        return Err(Error::Data("certification set is empty".into()));
    }
    if m == 0 {
        return Err(Error::Parameter("need at least one Monte-Carlo draw".into()));
    }
    let errors: Vec<f64> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut draw = rng.child_indexed("mc-draw", i);
            let weights = net.sample_weights(&mut draw);
            mlp::error_rate(&weights, &cert_set.x, &cert_set.y)
        })
        .collect::<Result<_>>()?;
    Ok(errors.iter().sum::<f64>() / m as f64)
}

/// Two-stage certificate from an already computed Monte-Carlo estimate.
pub fn certificate_from_estimate(mc_estimate: f64, inputs: BoundInputs) -> Result<Certificate> {
    inputs.validate()?;
    check_unit("Monte-Carlo estimate", mc_estimate)?;
    let emp_bound = kl_inverse(mc_estimate, inputs.sample_budget())?;
    let risk_bound = kl_inverse(emp_bound, inputs.pac_bayes_budget())?;
    Ok(Certificate {
        risk_bound,
        mc_estimate,
        emp_bound,
        kl_per_n: inputs.kl_value / inputs.n_cert as f64,
        inputs,
    })
}

/// Full certificate for `net` against `prior` on `cert_set`.
pub fn pac_bayes_kl_certificate(
    net: &ProbNetwork,
    prior: &PriorRef,
    cert_set: &Dataset,
    cfg: &CertifyConfig,
    rng: &SeededRng,
) -> Result<Certificate> {
    let kl = net.kl_to_prior(prior)?;
    if !kl.is_finite() {
        return Err(Error::Numeric(format!("KL(Q‖Q⁰) is {kl}")));
    }
    let inputs = BoundInputs::new(kl, cert_set.len(), cfg.m, cfg.delta, cfg.delta_prime)?;
    let mc = mc_empirical_error(net, cert_set, cfg.m, rng)?;
    certificate_from_estimate(mc, inputs)
}

/// `(√(emp + B) + √B)²` with `B = (KL + log(2√n/δ))/(2n)`.
pub fn quad_bound_value(emp: f64, kl: f64, n: usize, delta: f64) -> Result<f64> {
    check_unit("empirical term", emp)?;
    if !(kl >= 0.0) || !kl.is_finite() {
        return Err(Error::Parameter(format!(
            "KL must be finite and non-negative, got {kl}"
        )));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("δ must lie in (0, 1), got {delta}")));
    }
    let nf = n as f64;
    let b = (kl + (2.0 * nf.sqrt() / delta).ln()) / (2.0 * nf);
    Ok(quad_form(emp, b))
}

pub(crate) fn quad_form(emp: f64, b: f64) -> f64 {
    let s = (emp + b).sqrt() + b.sqrt();
    s * s
}
