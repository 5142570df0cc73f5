use rand::seq::SliceRandom;

use super::{epoch_order, EpochMetrics, Objective, PriorValState, SgdMomentum, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::batch_bounded_xe;
use crate::mlp::{self, LayerWeights};
use crate::model::{Center, ProbNetwork};
use crate::numeric::{sample_beta, Matrix};
use crate::rng::SeededRng;

#[derive(Clone, Debug)]
pub struct DeterministicPrior {
    pub weights: Vec<LayerWeights>,
    pub val: PriorValState,
    pub metrics: Vec<EpochMetrics>,
}

fn check_weights(weights: &[LayerWeights], epoch: usize) -> Result<()> {
    let finite = weights
        .iter()
        .all(|l| l.w.is_finite() && l.b.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(Error::Numeric(format!("weights diverged in epoch {epoch}")));
    }
    Ok(())
}

/// Minimizes the mean bounded cross-entropy of a deterministic network with
/// `erm`, `erm_dropout` or `mixup` minibatches. Means start from the
/// truncated-normal initialization drawn from `rng.child("init")`.
///
/// With `val` present and `cfg.validate` set, the snapshot with the lowest
/// validation 0-1 error is returned; otherwise the final weights are.
pub fn train_prior_deterministic(
    dims: &[usize],
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
    rng: &SeededRng,
) -> Result<DeterministicPrior> {
    if !cfg.objective.is_deterministic() {
        return Err(Error::Config(format!(
            "{} is not a deterministic prior objective",
            cfg.objective.name()
        )));
    }
    cfg.validate()?;
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

    let mut weights = ProbNetwork::init(dims, cfg.sigma0, &mut rng.child("init"), Center::Random)?.mean_weights();
    let mut opt = SgdMomentum::new(cfg.lr, cfg.momentum)?;
    let mut dropout_rng = rng.child("dropout");
    let mut mixup_rng = rng.child("mixup");
    let use_dropout = cfg.objective == Objective::ErmDropout && cfg.dropout_rate > 0.0;

    let mut state = PriorValState::default();
    let mut best = weights.clone();
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        cfg.check_deadline()?;
        let order = epoch_order(train.len(), epoch, rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = train.x.select_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| train.y[i]).collect();
            let (batch_loss, grad_logits, cache) = match cfg.objective {
                Objective::Mixup => {
                    let lambda = sample_beta(&mut mixup_rng, cfg.mixup_alpha)?;
                    let mut partner: Vec<usize> = (0..chunk.len()).collect();
                    partner.shuffle(&mut mixup_rng);
                    let mut xm = Matrix::zeros(xb.rows(), xb.cols());
                    for (r, &p) in partner.iter().enumerate() {
                        for ((o, a), b) in xm.row_mut(r).iter_mut().zip(xb.row(r)).zip(xb.row(p)) {
                            *o = lambda * a + (1.0 - lambda) * b;
                        }
                    }
                    let yp: Vec<usize> = partner.iter().map(|&p| yb[p]).collect();
                    let cache = mlp::forward_cached(&weights, &xm, None)?;
                    let (la, mut ga) = batch_bounded_xe(&cache.probs, &yb, &loss)?;
                    let (lb, gb) = batch_bounded_xe(&cache.probs, &yp, &loss)?;
                    for (a, b) in ga.data_mut().iter_mut().zip(gb.data()) {
                        *a = lambda * *a + (1.0 - lambda) * b;
                    }
                    (lambda * la + (1.0 - lambda) * lb, ga, cache)
                }
                _ => {
                    let masks =
                        use_dropout.then(|| mlp::dropout_masks(dims, chunk.len(), cfg.dropout_rate, &mut dropout_rng));
                    let cache = mlp::forward_cached(&weights, &xb, masks)?;
                    let (l, g) = batch_bounded_xe(&cache.probs, &yb, &loss)?;
                    (l, g, cache)
                }
            };
            let grads = mlp::backward(&weights, &cache, &grad_logits)?;
            opt.step(mlp::param_slices_mut(&mut weights), mlp::param_slices(&grads))?;
            total += batch_loss;
            batches += 1;
        }
        check_weights(&weights, epoch)?;

        let val_error = match val {
            Some(v) => {
                let e = mlp::error_rate(&weights, &v.x, &v.y)?;
                if state.record(epoch, e) {
                    best = weights.clone();
                }
                Some(e)
            }
            None => None,
        };
        let mean = total / batches as f64;
        metrics.push(EpochMetrics {
            stage: "prior".into(),
            epoch,
            objective: mean,
            emp_surrogate: mean,
            kl_per_n: None,
            val_error,
            checkpoint_risk: None,
        });
    }

    if val.is_none() || state.eval_history.is_empty() {
        state.best_epoch = cfg.epochs;
        best = weights;
    }
    Ok(DeterministicPrior {
        weights: best,
        val: state,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gaussian_blobs, BlobSpec};

    fn blobs(n: usize, seed: u64) -> Dataset {
        gaussian_blobs(
            &BlobSpec {
                n,
                features: 2,
                classes: 2,
                separation: 4.0,
                label_noise: 0.0,
            },
            seed,
        )
        .unwrap()
    }

    fn cfg(objective: Objective, epochs: usize) -> TrainConfig {
        TrainConfig {
            objective,
            epochs,
            batch_size: 32,
            lr: 0.05,
            momentum: 0.9,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn dropout_rate_zero_matches_erm() {
        let ds = blobs(120, 3);
        let rng = SeededRng::new(11);
        let a = train_prior_deterministic(&[2, 8, 2], &ds, None, &cfg(Objective::Erm, 5), &rng).unwrap();
        let b = train_prior_deterministic(&[2, 8, 2], &ds, None, &cfg(Objective::ErmDropout, 5), &rng).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn selection_never_worse_than_any_epoch() {
        let ds = blobs(200, 5);
        let val = blobs(60, 6);
        for objective in [Objective::Erm, Objective::ErmDropout, Objective::Mixup] {
            let c = TrainConfig {
                dropout_rate: 0.2,
                ..cfg(objective, 8)
            };
            let out = train_prior_deterministic(&[2, 6, 2], &ds, Some(&val), &c, &SeededRng::new(2)).unwrap();
            let best = out.val.best_val_error.unwrap();
            assert!(out.val.eval_history.iter().all(|&(_, e)| best <= e));
            let recomputed = mlp::error_rate(&out.weights, &val.x, &val.y).unwrap();
            assert_eq!(recomputed, best);
            assert_eq!(out.metrics.len(), 8);
        }
    }

    #[test]
    fn empty_validation_set_is_a_config_error() {
        let ds = blobs(40, 1);
        let empty = ds.subset(&[]);
        let r = train_prior_deterministic(
            &[2, 4, 2],
            &ds,
            Some(&empty),
            &cfg(Objective::Erm, 1),
            &SeededRng::new(0),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn rejects_stochastic_objective() {
        let ds = blobs(40, 1);
        let r = train_prior_deterministic(&[2, 4, 2], &ds, None, &cfg(Objective::Bbb, 1), &SeededRng::new(0));
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
