//! Optimizer, training objectives and the prior / posterior training loops.

mod deterministic;
mod objective;
pub mod sgd;
mod stochastic;

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossConfig;

pub use deterministic::{train_prior_deterministic, DeterministicPrior};
pub use objective::{objective_coefficients, objective_gradients, objective_quad_value, StepObjective};
pub use sgd::SgdMomentum;
pub use stochastic::{
    train_posterior, train_prior_probabilistic, CheckpointCertificate, Posterior, ProbabilisticPrior,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Erm,
    ErmDropout,
    Mixup,
    Bbb,
    QuadPrior,
    QuadPosterior,
}

impl Objective {
    pub fn is_deterministic(self) -> bool {
        matches!(self, Objective::Erm | Objective::ErmDropout | Objective::Mixup)
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Erm => "erm",
            Objective::ErmDropout => "erm_dropout",
            Objective::Mixup => "mixup",
            Objective::Bbb => "bbb",
            Objective::QuadPrior => "quad_prior",
            Objective::QuadPosterior => "quad_posterior",
        }
    }
}

/// Wall-clock limit for one training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deadline {
    start: Instant,
    limit: Duration,
}

impl Deadline {
    pub fn after(limit: Duration) -> Self {
        Self {
            start: Instant::now(),
            limit,
        }
    }

    pub fn check(&self) -> Result<()> {
        let elapsed = self.start.elapsed();
        if elapsed > self.limit {
            return Err(Error::Timeout(elapsed.as_secs_f64()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub objective: Objective,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub dropout_rate: f64,
    /// Beta(α, α) parameter for mixup coefficients.
    pub mixup_alpha: f64,
    /// KL trade-off η for `bbb` and the attenuated `quad_prior`.
    pub kl_coeff: Option<f64>,
    pub sigma0: f64,
    pub delta: f64,
    pub p_min: f64,
    /// Select the snapshot by validation error (prior) or checkpoint certificate (posterior).
    pub validate: bool,
    pub checkpoint_every: usize,
    pub checkpoint_mc_samples: usize,
    #[serde(skip)]
    pub deadline: Option<Deadline>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Objective::QuadPosterior,
            epochs: 100,
            batch_size: 250,
            lr: 0.005,
            momentum: 0.95,
            dropout_rate: 0.0,
            mixup_alpha: 0.2,
            kl_coeff: None,
            sigma0: 0.03,
            delta: 0.025,
            p_min: 1e-4,
            validate: true,
            checkpoint_every: 10,
            checkpoint_mc_samples: 1000,
            deadline: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.objective == Objective::Mixup && !(self.mixup_alpha > 0.0) {
            return Err(Error::Config(format!(
                "mixup_alpha must be positive, got {}",
                self.mixup_alpha
            )));
        }
        if matches!(self.objective, Objective::Bbb | Objective::QuadPrior) {
            match self.kl_coeff {
                None => return Err(Error::Config(format!("{} needs kl_coeff (η)", self.objective.name()))),
                Some(eta) if !(eta > 0.0) || !eta.is_finite() => {
                    return Err(Error::Config(format!("kl_coeff must be positive, got {eta}")))
                }
                _ => {}
            }
        }
        if !(self.sigma0 > 0.0 && self.sigma0 <= 1.0) {
            return Err(Error::Config(format!("sigma0 must lie in (0, 1], got {}", self.sigma0)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.checkpoint_every == 0 || self.checkpoint_mc_samples == 0 {
            return Err(Error::Config(
                "checkpoint_every and checkpoint_mc_samples must be positive".into(),
            ));
        }
        LossConfig::new(self.p_min)?;
        SgdMomentum::new(self.lr, self.momentum)?;
        Ok(())
    }

    pub(crate) fn loss(&self) -> LossConfig {
        LossConfig { p_min: self.p_min }
    }

    pub(crate) fn check_deadline(&self) -> Result<()> {
        self.deadline.as_ref().map_or(Ok(()), Deadline::check)
    }
}

/// Prior-validation bookkeeping: every evaluated epoch and the winner.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorValState {
    /// Lowest validation 0-1 error seen; `None` when validation is off.
    pub best_val_error: Option<f64>,
    /// Epoch of the returned snapshot (0 is the initialization).
    pub best_epoch: usize,
    pub eval_history: Vec<(usize, f64)>,
}

impl PriorValState {
    /// Records an evaluation; returns true when it becomes the new best.
    /// Only a strict improvement wins, so the earliest epoch keeps ties.
    pub(crate) fn record(&mut self, epoch: usize, val_error: f64) -> bool {
        self.eval_history.push((epoch, val_error));
        if self.best_val_error.map_or(true, |b| val_error < b) {
            self.best_val_error = Some(val_error);
            self.best_epoch = epoch;
            true
        } else {
            false
        }
    }
}

/// One line of the per-epoch metrics stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub stage: String,
    pub epoch: usize,
    /// Mean training objective over the epoch's minibatches.
    pub objective: f64,
    /// Mean bounded cross-entropy over the epoch's minibatches.
    pub emp_surrogate: f64,
    pub kl_per_n: Option<f64>,
    pub val_error: Option<f64>,
    pub checkpoint_risk: Option<f64>,
}

/// Writes metrics as line-delimited JSON.
pub fn write_metrics<W: Write>(metrics: &[EpochMetrics], mut out: W) -> Result<()> {
    for m in metrics {
        serde_json::to_writer(&mut out, m)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub(crate) fn epoch_order(n: usize, epoch: usize, rng: &crate::rng::SeededRng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng.child_indexed("shuffle", epoch as u64));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bbb = TrainConfig {
            objective: Objective::Bbb,
            ..TrainConfig::default()
        };
        assert!(matches!(bbb.validate(), Err(Error::Config(_))));
        let bbb = TrainConfig {
            kl_coeff: Some(1e-3),
            ..bbb
        };
        assert!(bbb.validate().is_ok());
        let bad = TrainConfig {
            dropout_rate: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = TrainConfig {
            objective: Objective::Mixup,
            kl_coeff: Some(0.5),
            ..TrainConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"mixup\""));
        let back: TrainConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn selection_keeps_earliest_minimum() {
        let mut s = PriorValState::default();
        assert!(s.record(1, 0.3));
        assert!(s.record(2, 0.2));
        assert!(!s.record(3, 0.2));
        assert!(!s.record(4, 0.25));
        assert_eq!((s.best_epoch, s.best_val_error), (2, Some(0.2)));
        let min = s.eval_history.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        assert_eq!(s.best_val_error, Some(min));
    }

    #[test]
    fn metrics_are_line_delimited() {
        let m = EpochMetrics {
            stage: "posterior".into(),
            epoch: 1,
            objective: 0.5,
            emp_surrogate: 0.2,
            kl_per_n: Some(0.01),
            val_error: None,
            checkpoint_risk: None,
        };
        let mut buf = Vec::new();
        write_metrics(&[m.clone(), m], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: EpochMetrics = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back.epoch, 1);
    }
}
