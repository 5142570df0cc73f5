use super::{epoch_order, objective_gradients, EpochMetrics, Objective, PriorValState, SgdMomentum, TrainConfig};
use crate::certify::{pac_bayes_kl_certificate, Certificate, CertifyConfig};
use crate::data::{Dataset, Partition};
use crate::error::{Error, Result};
use crate::losses::LossConfig;
use crate::mlp;
use crate::model::{PriorRef, ProbNetwork};
use crate::rng::SeededRng;

#[derive(Clone, Debug)]
pub struct ProbabilisticPrior {
    pub network: ProbNetwork,
    pub val: PriorValState,
    pub metrics: Vec<EpochMetrics>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckpointCertificate {
    pub epoch: usize,
    pub certificate: Certificate,
}

#[derive(Clone, Debug)]
pub struct Posterior {
    pub network: ProbNetwork,
    /// Epoch of the returned snapshot (0 is the prior itself).
    pub best_epoch: usize,
    pub checkpoints: Vec<CheckpointCertificate>,
    pub metrics: Vec<EpochMetrics>,
}

struct EpochSummary {
    objective: f64,
    emp: f64,
    kl: f64,
}

/// One pass over `data` in minibatches, one weight sample per batch.
#[allow(clippy::too_many_arguments)]
fn run_epoch(
    net: &mut ProbNetwork,
    opt: &mut SgdMomentum,
    data: &Dataset,
    reference: &PriorRef,
    objective: Objective,
    eta: f64,
    cfg: &TrainConfig,
    loss: &LossConfig,
    epoch: usize,
    rng: &SeededRng,
    noise_rng: &mut SeededRng,
) -> Result<EpochSummary> {
    let order = epoch_order(data.len(), epoch, rng);
    let mut total = 0.0;
    let mut emp = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(cfg.batch_size) {
        let xb = data.x.select_rows(chunk);
        let yb: Vec<usize> = chunk.iter().map(|&i| data.y[i]).collect();
        let (step, grads) = objective_gradients(
            net,
            reference,
            &xb,
            &yb,
            objective,
            data.len(),
            eta,
            cfg.delta,
            loss,
            noise_rng,
        )?;
        if !grads.max_abs().is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient in epoch {epoch}")));
        }
        opt.step(net.param_slices_mut(), grads.slices())?;
        total += step.value;
        emp += step.emp;
        batches += 1;
    }
    let kl = net.kl_to_prior(reference)?;
    if !kl.is_finite() {
        return Err(Error::Numeric(format!("KL diverged in epoch {epoch}")));
    }
    Ok(EpochSummary {
        objective: total / batches as f64,
        emp: emp / batches as f64,
        kl,
    })
}

/// Trains a Gaussian prior with `bbb` or the KL-attenuated `quad_prior`,
/// starting from and regularized towards `pre_prior`.
///
/// Validation scores the mean network's 0-1 error; with `val` present and
/// `cfg.validate` set the best snapshot is returned, else the final one.
pub fn train_prior_probabilistic(
    train: &Dataset,
    val: Option<&Dataset>,
    pre_prior: &PriorRef,
    cfg: &TrainConfig,
    rng: &SeededRng,
) -> Result<ProbabilisticPrior> {
    if !matches!(cfg.objective, Objective::Bbb | Objective::QuadPrior) {
        return Err(Error::Config(format!(
            "{} is not a probabilistic prior objective",
            cfg.objective.name()
        )));
    }
    cfg.validate()?;
    let eta = cfg
        .kl_coeff
        .ok_or_else(|| Error::Config("kl_coeff (η) is required".into()))?;
    let loss = cfg.loss();
    loss.validate_for(train.num_classes)?;
    if train.is_empty() {
        return Err(Error::Data("prior training set is empty".into()));
    }
    let val = if cfg.validate { val } else { None };
    if val.is_some_and(Dataset::is_empty) {
        return Err(Error::Config(
            "validation is enabled but the validation set is empty".into(),
        ));
    }

    let mut net = pre_prior.to_network();
    let mut best = net.clone();
    let mut opt = SgdMomentum::new(cfg.lr, cfg.momentum)?;
    let mut noise_rng = rng.child("weight-noise");
    let mut state = PriorValState::default();
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        cfg.check_deadline()?;
        let s = run_epoch(
            &mut net,
            &mut opt,
            train,
            pre_prior,
            cfg.objective,
            eta,
            cfg,
            &loss,
            epoch,
            rng,
            &mut noise_rng,
        )?;
        let val_error = match val {
            Some(v) => {
                let e = mlp::error_rate(&net.mean_weights(), &v.x, &v.y)?;
                if state.record(epoch, e) {
                    best = net.clone();
                }
                Some(e)
            }
            None => None,
        };
        metrics.push(EpochMetrics {
            stage: "prior".into(),
            epoch,
            objective: s.objective,
            emp_surrogate: s.emp,
            kl_per_n: Some(s.kl / train.len() as f64),
            val_error,
            checkpoint_risk: None,
        });
    }

    if val.is_none() || state.eval_history.is_empty() {
        state.best_epoch = cfg.epochs;
        best = net;
    }
    Ok(ProbabilisticPrior {
        network: best,
        val: state,
        metrics,
    })
}

/// Trains the posterior from `prior` on all of `S` with the `quad_posterior`
/// objective (`n = |S|`).
///
/// When `cfg.validate` is set, a certificate with `cfg.checkpoint_mc_samples`
/// draws is computed on the certification rows every `cfg.checkpoint_every`
/// epochs and after the last one, and the snapshot with the lowest bound is
/// returned (earliest on ties). Otherwise the final network is returned.
pub fn train_posterior(
    data: &Dataset,
    partition: &Partition,
    prior: &PriorRef,
    cfg: &TrainConfig,
    certify: &CertifyConfig,
    rng: &SeededRng,
) -> Result<Posterior> {
    if cfg.objective != Objective::QuadPosterior {
        return Err(Error::Config(format!(
            "posterior training uses quad_posterior, got {}",
            cfg.objective.name()
        )));
    }
    cfg.validate()?;
    partition.validate(data.len())?;
    let s = data.subset(&partition.idx_s());
    let cert = data.subset(&partition.idx_cert);
    if s.is_empty() || cert.is_empty() {
        return Err(Error::Partition(
            "posterior needs non-empty S and certification sets".into(),
        ));
    }
    let loss = cfg.loss();
    loss.validate_for(data.num_classes)?;
    let checkpoint_cfg = CertifyConfig {
        m: cfg.checkpoint_mc_samples,
        ..*certify
    };

    let mut net = prior.to_network();
    let mut opt = SgdMomentum::new(cfg.lr, cfg.momentum)?;
    let mut noise_rng = rng.child("weight-noise");
    let mut checkpoints: Vec<CheckpointCertificate> = Vec::new();
    let mut best: Option<(f64, usize, ProbNetwork)> = None;
    let mut metrics = Vec::with_capacity(cfg.epochs);

    let mut checkpoint = |net: &ProbNetwork, epoch: usize| -> Result<f64> {
        let c = pac_bayes_kl_certificate(
            net,
            prior,
            &cert,
            &checkpoint_cfg,
            &rng.child_indexed("checkpoint-cert", epoch as u64),
        )?;
        let risk = c.risk_bound;
        if best.as_ref().map_or(true, |(b, _, _)| risk < *b) {
            best = Some((risk, epoch, net.clone()));
        }
        checkpoints.push(CheckpointCertificate { epoch, certificate: c });
        Ok(risk)
    };

    if cfg.validate && cfg.epochs == 0 {
        checkpoint(&net, 0)?;
    }
    for epoch in 1..=cfg.epochs {
        cfg.check_deadline()?;
        let summary = run_epoch(
            &mut net,
            &mut opt,
            &s,
            prior,
            Objective::QuadPosterior,
            1.0,
            cfg,
            &loss,
            epoch,
            rng,
            &mut noise_rng,
        )?;
        let risk = if cfg.validate && (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs) {
            Some(checkpoint(&net, epoch)?)
        } else {
            None
        };
        metrics.push(EpochMetrics {
            stage: "posterior".into(),
            epoch,
            objective: summary.objective,
            emp_surrogate: summary.emp,
            kl_per_n: Some(summary.kl / s.len() as f64),
            val_error: None,
            checkpoint_risk: risk,
        });
    }

    let (network, best_epoch) = match best {
        Some((_, epoch, snapshot)) => (snapshot, epoch),
        None => (net, cfg.epochs),
    };
    Ok(Posterior {
        network,
        best_epoch,
        checkpoints,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gaussian_blobs, make_partition, BlobSpec, PartitionPlan};
    use crate::model::Center;

    fn blobs() -> Dataset {
        gaussian_blobs(
            &BlobSpec {
                n: 300,
                features: 3,
                classes: 2,
                separation: 3.0,
                label_noise: 0.05,
            },
            9,
        )
        .unwrap()
    }

    fn prior(dims: &[usize], sigma0: f64) -> PriorRef {
        let net = ProbNetwork::init(dims, sigma0, &mut SeededRng::new(1), Center::Random).unwrap();
        PriorRef::from_network(&net, sigma0)
    }

    fn posterior_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            objective: Objective::QuadPosterior,
            epochs,
            batch_size: 50,
            lr: 0.01,
            momentum: 0.9,
            sigma0: 0.1,
            checkpoint_every: 2,
            checkpoint_mc_samples: 20,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_the_prior() {
        let ds = blobs();
        let part = make_partition(&ds, &PartitionPlan::default(), &SeededRng::new(0)).unwrap();
        let p = prior(&[3, 5, 2], 0.1);
        let out = train_posterior(
            &ds,
            &part,
            &p,
            &posterior_cfg(0),
            &CertifyConfig::default(),
            &SeededRng::new(3),
        )
        .unwrap();
        assert_eq!(out.network.kl_to_prior(&p).unwrap(), 0.0);
        assert_eq!(out.network, p.to_network());
        assert_eq!(out.checkpoints.len(), 1);
    }

    #[test]
    fn best_checkpoint_is_returned_and_run_is_reproducible() {
        let ds = blobs();
        let part = make_partition(&ds, &PartitionPlan::default(), &SeededRng::new(0)).unwrap();
        let p = prior(&[3, 5, 2], 0.1);
        let cfg = posterior_cfg(5);
        let a = train_posterior(&ds, &part, &p, &cfg, &CertifyConfig::default(), &SeededRng::new(3)).unwrap();
        let b = train_posterior(&ds, &part, &p, &cfg, &CertifyConfig::default(), &SeededRng::new(3)).unwrap();
        assert_eq!(a.network, b.network);
        let epochs: Vec<usize> = a.checkpoints.iter().map(|c| c.epoch).collect();
        assert_eq!(epochs, vec![2, 4, 5]);
        let min = a
            .checkpoints
            .iter()
            .map(|c| c.certificate.risk_bound)
            .fold(f64::INFINITY, f64::min);
        let chosen = a.checkpoints.iter().find(|c| c.epoch == a.best_epoch).unwrap();
        assert_eq!(chosen.certificate.risk_bound, min);
        assert!(a.metrics.iter().all(|m| m.objective >= m.emp_surrogate));
    }

    #[test]
    fn overlapping_partition_is_rejected() {
        let ds = blobs();
        let mut part = make_partition(&ds, &PartitionPlan::default(), &SeededRng::new(0)).unwrap();
        part.idx_cert.push(part.idx_prior_train[0]);
        let p = prior(&[3, 5, 2], 0.1);
        let r = train_posterior(
            &ds,
            &part,
            &p,
            &posterior_cfg(1),
            &CertifyConfig::default(),
            &SeededRng::new(3),
        );
        assert!(matches!(r, Err(Error::Partition(_))));
    }

    #[test]
    fn probabilistic_prior_needs_eta() {
        let ds = blobs();
        let p = prior(&[3, 5, 2], 0.1);
        let cfg = TrainConfig {
            objective: Objective::Bbb,
            ..posterior_cfg(1)
        };
        assert!(matches!(
            train_prior_probabilistic(&ds, None, &p, &cfg, &SeededRng::new(0)),
            Err(Error::Config(_))
        ));
        let cfg = TrainConfig {
            kl_coeff: Some(1e-3),
            ..cfg
        };
        let out = train_prior_probabilistic(&ds, None, &p, &cfg, &SeededRng::new(0)).unwrap();
        assert!(out.network.kl_to_prior(&p).unwrap() > 0.0);
        assert_eq!(out.val.best_epoch, 1);
    }
}
