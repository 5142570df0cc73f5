use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::{BaselineConfig, PriorCenter, PriorSpec, RunConfig};
use crate::certify::{mc_empirical_error, pac_bayes_kl_certificate, Certificate};
use crate::checkpoint::NetworkCheckpoint;
use crate::data::{fit_standardizer, make_partition, stratified_split_indices, Dataset, Partition};
use crate::error::{Error, Result, StageExt};
use crate::mlp;
use crate::model::{Center, PriorRef, ProbNetwork};
use crate::rng::SeededRng;
use crate::training::{
    train_posterior, train_prior_deterministic, train_prior_probabilistic, write_metrics, CheckpointCertificate,
    Deadline, EpochMetrics, Posterior, TrainConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSizes {
    pub test: usize,
    pub prior_train: usize,
    pub prior_val: usize,
    pub cert: usize,
    pub s: usize,
    pub unused: usize,
}

impl PartitionSizes {
    pub fn of(p: &Partition) -> Self {
        Self {
            test: p.idx_test.len(),
            prior_train: p.idx_prior_train.len(),
            prior_val: p.idx_prior_val.len(),
            cert: p.idx_cert.len(),
            s: p.idx_s().len(),
            unused: p.idx_unused.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorMetrics {
    pub kind: String,
    pub best_epoch: Option<usize>,
    pub val_error: Option<f64>,
    pub mean_test_error: Option<f64>,
    pub stochastic_test_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMetrics {
    pub best_epoch: usize,
    pub mean_test_error: Option<f64>,
    pub stochastic_test_error: Option<f64>,
    pub kl: f64,
    pub checkpoints: Vec<CheckpointCertificate>,
}

/// Result of one full prior → posterior → certificate run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub dataset: String,
    pub config: RunConfig,
    pub num_params: usize,
    pub sizes: PartitionSizes,
    pub prior: PriorMetrics,
    pub posterior: PosteriorMetrics,
    pub certificate: Certificate,
    pub wall_time_secs: f64,
}

/// A run record together with the artifacts it was computed from.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub record: RunRecord,
    pub partition: Partition,
    pub prior: PriorRef,
    pub posterior: ProbNetwork,
    pub metrics: Vec<EpochMetrics>,
}

/// Fits the standardizer on the `S` rows and applies it to every row.
pub fn standardize_on(ds: &Dataset, rows: &[usize]) -> Result<Dataset> {
    let st = fit_standardizer(&ds.x.select_rows(rows));
    ds.with_features(st.apply(&ds.x)?)
}

/// Error rates of the mean network and of `draws` sampled networks on `test`.
pub fn test_errors(
    net: &ProbNetwork,
    test: &Dataset,
    draws: usize,
    rng: &SeededRng,
) -> Result<(Option<f64>, Option<f64>)> {
    if test.is_empty() {
        return Ok((None, None));
    }
    let mean = mlp::error_rate(&net.mean_weights(), &test.x, &test.y)?;
    let stochastic = mc_empirical_error(net, test, draws, rng)?;
    Ok((Some(mean), Some(stochastic)))
}

fn with_deadline(cfg: &TrainConfig, deadline: Option<Deadline>) -> TrainConfig {
    TrainConfig {
        deadline,
        ..cfg.clone()
    }
}

/// Output of the prior stage.
#[derive(Clone, Debug)]
pub struct PriorStage {
    pub prior: PriorRef,
    pub best_epoch: Option<usize>,
    pub val_error: Option<f64>,
    pub metrics: Vec<EpochMetrics>,
}

/// A validated run with its partition drawn and features standardized.
/// Each stage draws from its own child stream of the run seed, so stages
/// can be executed separately and still reproduce a full run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub seed: u64,
    pub dataset: String,
    pub partition: Partition,
    /// Whole dataset, standardized with statistics of `S`.
    pub data: Dataset,
    pub dims: Vec<usize>,
    deadline: Option<Deadline>,
    root: SeededRng,
}

/// Validates `cfg`, draws the partition and standardizes on `S`.
pub fn prepare(ds: &Dataset, cfg: &RunConfig, seed: u64) -> Result<Prepared> {
    cfg.validate().stage("config")?;
    let config = cfg.normalized();
    let deadline = config.timeout_secs.map(|s| Deadline::after(Duration::from_secs_f64(s)));
    let root = SeededRng::new(seed);
    let partition = make_partition(ds, &config.plan, &root.child("partition")).stage("partition")?;
    let data = standardize_on(ds, &partition.idx_s()).stage("standardize")?;
    Ok(Prepared {
        dims: config.arch.dims(ds.num_features(), ds.num_classes),
        config,
        seed,
        dataset: ds.name.clone(),
        partition,
        data,
        deadline,
        root,
    })
}

impl Prepared {
    pub fn test_set(&self) -> Dataset {
        self.data.subset(&self.partition.idx_test)
    }

    pub fn cert_set(&self) -> Dataset {
        self.data.subset(&self.partition.idx_cert)
    }

    pub fn config_hash(&self) -> String {
        self.config.config_hash(&self.dataset, self.seed)
    }

    pub fn train_prior(&self) -> Result<PriorStage> {
        self.build_prior(&self.root.child("prior")).stage("prior")
    }

    fn build_prior(&self, rng: &SeededRng) -> Result<PriorStage> {
        let cfg = &self.config;
        let dims = &self.dims;
        let part = &self.partition;
        match &cfg.prior {
            PriorSpec::DataFree { center } => {
                let center = match center {
                    PriorCenter::Random => Center::Random,
                    PriorCenter::Zero => Center::Zero,
                };
                let net = ProbNetwork::init(dims, cfg.sigma0, &mut rng.child("init"), center)?;
                Ok(PriorStage {
                    prior: PriorRef::from_network(&net, cfg.sigma0),
                    best_epoch: None,
                    val_error: None,
                    metrics: Vec::new(),
                })
            }
            PriorSpec::Learned { train } => {
                let train_cfg = with_deadline(train, self.deadline);
                let train_set = self.data.subset(&part.idx_prior_train);
                let val_set = self.data.subset(&part.idx_prior_val);
                let val = (!val_set.is_empty()).then_some(&val_set);
                if train.objective.is_deterministic() {
                    let out = train_prior_deterministic(dims, &train_set, val, &train_cfg, rng)?;
                    let net = ProbNetwork::init(dims, cfg.sigma0, &mut rng.child("init"), Center::Given(out.weights))?;
                    Ok(PriorStage {
                        prior: PriorRef::from_network(&net, cfg.sigma0),
                        best_epoch: Some(out.val.best_epoch),
                        val_error: out.val.best_val_error,
                        metrics: out.metrics,
                    })
                } else {
                    let pre = ProbNetwork::init(dims, cfg.sigma0, &mut rng.child("init"), Center::Random)?;
                    let pre = PriorRef::from_network(&pre, cfg.sigma0);
                    let out = train_prior_probabilistic(&train_set, val, &pre, &train_cfg, rng)?;
                    Ok(PriorStage {
                        prior: PriorRef::from_network(&out.network, cfg.sigma0),
                        best_epoch: Some(out.val.best_epoch),
                        val_error: out.val.best_val_error,
                        metrics: out.metrics,
                    })
                }
            }
        }
    }

    pub fn train_posterior(&self, prior: &PriorRef) -> Result<Posterior> {
        let cfg = with_deadline(&self.config.posterior, self.deadline);
        train_posterior(
            &self.data,
            &self.partition,
            prior,
            &cfg,
            &self.config.certify,
            &self.root.child("posterior"),
        )
        .stage("posterior")
    }

    /// Full-size certificate on the certification rows.
    pub fn certify(&self, prior: &PriorRef, posterior: &ProbNetwork) -> Result<Certificate> {
        let c = pac_bayes_kl_certificate(
            posterior,
            prior,
            &self.cert_set(),
            &self.config.certify,
            &self.root.child("certificate"),
        )
        .stage("certify")?;
        if let Some(d) = self.deadline {
            d.check().stage("certify")?;
        }
        Ok(c)
    }

    /// Mean and stochastic test error of `net`; `label` separates the streams.
    pub fn evaluate(&self, net: &ProbNetwork, label: &str) -> Result<(Option<f64>, Option<f64>)> {
        test_errors(net, &self.test_set(), self.config.test_draws, &self.root.child(label)).stage("evaluate")
    }
}

/// Partition → prior → posterior → full certificate → test evaluation.
/// Errors carry the name of the stage they came from.
pub fn run_pipeline(ds: &Dataset, cfg: &RunConfig, seed: u64) -> Result<PipelineOutput> {
    let started = Instant::now();
    let prep = prepare(ds, cfg, seed)?;
    let built = prep.train_prior()?;
    let (prior_mean, prior_stoch) = prep.evaluate(&built.prior.to_network(), "prior-test")?;
    let post = prep.train_posterior(&built.prior)?;
    let certificate = prep.certify(&built.prior, &post.network)?;
    let (post_mean, post_stoch) = prep.evaluate(&post.network, "test")?;

    let cfg = &prep.config;
    let record = RunRecord {
        config_hash: prep.config_hash(),
        seed,
        dataset: ds.name.clone(),
        num_params: cfg.arch.num_params(ds.num_features(), ds.num_classes),
        sizes: PartitionSizes::of(&prep.partition),
        prior: PriorMetrics {
            kind: cfg.prior.label().into(),
            best_epoch: built.best_epoch,
            val_error: built.val_error,
            mean_test_error: prior_mean,
            stochastic_test_error: prior_stoch,
        },
        posterior: PosteriorMetrics {
            best_epoch: post.best_epoch,
            mean_test_error: post_mean,
            stochastic_test_error: post_stoch,
            kl: certificate.inputs.kl_value,
            checkpoints: post.checkpoints,
        },
        certificate,
        config: cfg.clone(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    let mut metrics = built.metrics;
    metrics.extend(post.metrics);
    Ok(PipelineOutput {
        record,
        partition: prep.partition,
        prior: built.prior,
        posterior: post.network,
        metrics,
    })
}

impl PipelineOutput {
    /// Writes `runs/<hash>/record.json`, the partition manifest, the metrics
    /// stream and both networks under `runs/<hash>/checkpoints/`.
    pub fn persist(&self, out_root: &Path) -> Result<PathBuf> {
        let dir = out_root.join("runs").join(&self.record.config_hash);
        let ckpt = dir.join("checkpoints");
        fs::create_dir_all(&ckpt)?;
        fs::write(dir.join("record.json"), serde_json::to_string_pretty(&self.record)?)?;
        fs::write(dir.join("partition.tsv"), self.partition.manifest())?;
        write_metrics(&self.metrics, fs::File::create(dir.join("metrics.jsonl"))?)?;
        let seed = self.record.seed;
        NetworkCheckpoint::from_prior(&self.prior, seed).save(ckpt.join("prior.pbnn"))?;
        NetworkCheckpoint::new(self.posterior.clone(), self.prior.sigma0(), seed).save(ckpt.join("posterior.pbnn"))?;
        Ok(dir)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmBaselineRecord {
    pub config_hash: String,
    pub seed: u64,
    pub dataset: String,
    pub config: BaselineConfig,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub best_epoch: usize,
    pub val_error: Option<f64>,
    pub test_error: Option<f64>,
    pub wall_time_secs: f64,
}

/// Deterministic network trained on `S` minus a stratified validation
/// share, selected by validation error, scored on the test split.
pub fn run_erm_baseline(ds: &Dataset, cfg: &BaselineConfig, seed: u64) -> Result<ErmBaselineRecord> {
    let started = Instant::now();
    if !cfg.train.objective.is_deterministic() {
        return Err(Error::Config("the baseline trains a deterministic network".into())).stage("config");
    }
    let plan = crate::data::PartitionPlan {
        prior_fraction: 0.0,
        prior_val_fraction: 0.0,
        ..cfg.plan.clone()
    };
    let root = SeededRng::new(seed);
    let partition = make_partition(ds, &plan, &root.child("partition")).stage("partition")?;
    let idx_s = partition.idx_s();
    let data = standardize_on(ds, &idx_s).stage("standardize")?;
    let (idx_val, idx_train) = if cfg.val_fraction > 0.0 {
        stratified_split_indices(
            &idx_s,
            &ds.y,
            ds.num_classes,
            cfg.val_fraction,
            &mut root.child("val-split"),
        )
        .stage("partition")?
    } else {
        (Vec::new(), idx_s)
    };
    let train = data.subset(&idx_train);
    let val = data.subset(&idx_val);
    let test = data.subset(&partition.idx_test);
    let dims = cfg.arch.dims(ds.num_features(), ds.num_classes);
    let out = train_prior_deterministic(
        &dims,
        &train,
        (!val.is_empty()).then_some(&val),
        &cfg.train,
        &root.child("train"),
    )
    .stage("train")?;
    let test_error = if test.is_empty() {
        None
    } else {
        Some(mlp::error_rate(&out.weights, &test.x, &test.y).stage("evaluate")?)
    };
    Ok(ErmBaselineRecord {
        config_hash: cfg.config_hash(&ds.name, seed),
        seed,
        dataset: ds.name.clone(),
        config: cfg.clone(),
        train_size: train.len(),
        val_size: val.len(),
        test_size: test.len(),
        best_epoch: out.val.best_epoch,
        val_error: out.val.best_val_error,
        test_error,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::CertifyConfig;
    use crate::data::{gaussian_blobs, BlobSpec, PartitionPlan};
    use crate::experiment::config::Architecture;
    use crate::training::Objective;

    pub(crate) fn small_config() -> RunConfig {
        RunConfig {
            arch: Architecture {
                hidden_units: 8,
                depth: 1,
            },
            sigma0: 0.05,
            prior: PriorSpec::Learned {
                train: TrainConfig {
                    objective: Objective::Erm,
                    epochs: 5,
                    batch_size: 32,
                    lr: 0.05,
                    momentum: 0.9,
                    ..TrainConfig::default()
                },
            },
            posterior: TrainConfig {
                epochs: 3,
                batch_size: 32,
                lr: 0.01,
                momentum: 0.9,
                checkpoint_every: 2,
                checkpoint_mc_samples: 10,
                ..TrainConfig::default()
            },
            certify: CertifyConfig {
                m: 50,
                ..CertifyConfig::default()
            },
            ..RunConfig::default()
        }
    }

    fn blobs() -> Dataset {
        gaussian_blobs(
            &BlobSpec {
                n: 400,
                features: 4,
                classes: 3,
                separation: 3.0,
                label_noise: 0.0,
            },
            4,
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_record() {
        let ds = blobs();
        let mut a = run_pipeline(&ds, &small_config(), 7).unwrap().record;
        let mut b = run_pipeline(&ds, &small_config(), 7).unwrap().record;
        a.wall_time_secs = 0.0;
        b.wall_time_secs = 0.0;
        assert_eq!(a, b);
        assert!(a.certificate.chain_holds());
        assert_eq!(a.sizes.test + a.sizes.s, ds.len());
    }

    #[test]
    fn data_free_run_certifies_on_all_of_s() {
        let ds = blobs();
        let cfg = RunConfig {
            plan: PartitionPlan {
                prior_fraction: 0.0,
                ..PartitionPlan::default()
            },
            prior: PriorSpec::DataFree {
                center: PriorCenter::Random,
            },
            ..small_config()
        };
        let out = run_pipeline(&ds, &cfg, 1).unwrap();
        assert_eq!(out.record.sizes.cert, out.record.sizes.s);
        assert_eq!(out.record.prior.kind, "data_free");
    }

    #[test]
    fn errors_are_stage_labelled() {
        let ds = blobs();
        let cfg = RunConfig {
            prior: PriorSpec::DataFree {
                center: PriorCenter::Zero,
            },
            ..small_config()
        };
        let err = run_pipeline(&ds, &cfg, 1).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "config", .. }));
    }

    #[test]
    fn persist_writes_layout() {
        let ds = blobs();
        let out = run_pipeline(&ds, &small_config(), 3).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dir = out.persist(tmp.path()).unwrap();
        assert!(dir.ends_with(format!("runs/{}", out.record.config_hash)));
        let back: RunRecord = serde_json::from_str(&fs::read_to_string(dir.join("record.json")).unwrap()).unwrap();
        assert_eq!(back, out.record);
        let post = NetworkCheckpoint::load(dir.join("checkpoints/posterior.pbnn")).unwrap();
        assert_eq!(post.network, out.posterior);
    }

    #[test]
    fn baseline_runs() {
        let ds = blobs();
        let cfg = BaselineConfig {
            arch: Architecture {
                hidden_units: 8,
                depth: 1,
            },
            train: TrainConfig {
                objective: Objective::Erm,
                epochs: 10,
                batch_size: 32,
                lr: 0.05,
                momentum: 0.9,
                ..TrainConfig::default()
            },
            ..BaselineConfig::default()
        };
        let r = run_erm_baseline(&ds, &cfg, 2).unwrap();
        assert_eq!(r.test_size, 80);
        assert_eq!(r.val_size, 16);
        assert!(r.test_error.unwrap() < 0.2);
    }
}
