use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::CertifyConfig;
use crate::data::{gaussian_blobs, load_mnist_dir, load_tabular, BlobSpec, Dataset, LabelColumn, PartitionPlan};
use crate::error::{Error, Result};
use crate::training::{Objective, TrainConfig};

/// Where a dataset comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Tabular {
        path: PathBuf,
        #[serde(default)]
        label: LabelColumn,
    },
    /// Directory with the four standard MNIST IDX files.
    Mnist { dir: PathBuf },
    Blobs {
        #[serde(flatten)]
        spec: BlobSpec,
        seed: u64,
    },
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Tabular { path, label } => load_tabular(path, label),
            DatasetSpec::Mnist { dir } => load_mnist_dir(dir),
            DatasetSpec::Blobs { spec, seed } => gaussian_blobs(spec, *seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub hidden_units: usize,
    /// Number of hidden layers.
    pub depth: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden_units: 100,
            depth: 2,
        }
    }
}

impl Architecture {
    /// Layer widths `[inputs, hidden × depth, classes]`.
    pub fn dims(&self, inputs: usize, classes: usize) -> Vec<usize> {
        let mut dims = vec![inputs];
        dims.extend(std::iter::repeat(self.hidden_units).take(self.depth));
        dims.push(classes);
        dims
    }

    /// Weights plus biases of a deterministic network with these widths.
    pub fn num_params(&self, inputs: usize, classes: usize) -> usize {
        self.dims(inputs, classes).windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorCenter {
    Random,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Gaussian at `sigma0` around random or zero weights; uses no data.
    DataFree { center: PriorCenter },
    /// Trained on the prior share of `S` with a deterministic or probabilistic objective.
    Learned { train: TrainConfig },
}

impl PriorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            PriorSpec::DataFree { .. } => "data_free",
            PriorSpec::Learned { train } => train.objective.name(),
        }
    }
}

/// Everything that determines one prior → posterior → certificate run,
/// apart from the dataset and the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub arch: Architecture,
    pub plan: PartitionPlan,
    /// Prior scale; overrides `sigma0` of the nested train configs.
    pub sigma0: f64,
    pub prior: PriorSpec,
    pub posterior: TrainConfig,
    pub certify: CertifyConfig,
    /// Weight draws averaged for stochastic test error.
    pub test_draws: usize,
    pub timeout_secs: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arch: Architecture::default(),
            plan: PartitionPlan::default(),
            sigma0: 0.03,
            prior: PriorSpec::Learned {
                train: TrainConfig {
                    objective: Objective::ErmDropout,
                    epochs: 500,
                    dropout_rate: 0.1,
                    ..TrainConfig::default()
                },
            },
            posterior: TrainConfig::default(),
            certify: CertifyConfig::default(),
            test_draws: 10,
            timeout_secs: None,
        }
    }
}

impl RunConfig {
    /// Copy with `sigma0` pushed into the nested configs and the posterior
    /// objective fixed, as actually used by the pipeline.
    pub fn normalized(&self) -> RunConfig {
        let mut c = self.clone();
        c.posterior.sigma0 = c.sigma0;
        c.posterior.objective = Objective::QuadPosterior;
        c.posterior.delta = c.certify.delta;
        if let PriorSpec::Learned { train } = &mut c.prior {
            train.sigma0 = c.sigma0;
            train.delta = c.certify.delta;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if self.arch.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be positive".into()));
        }
        if self.test_draws == 0 {
            return Err(Error::Config("test_draws must be positive".into()));
        }
        if let Some(t) = self.timeout_secs {
            if !(t > 0.0) {
                return Err(Error::Config(format!("timeout_secs must be positive, got {t}")));
            }
        }
        self.certify
            .validate()
            .map_err(|e| Error::Config(format!("certify: {e}")))?;
        let c = self.normalized();
        c.posterior.validate()?;
        match &c.prior {
            PriorSpec::DataFree { .. } if c.plan.prior_fraction > 0.0 => {
                Err(Error::Config("a data-free prior needs prior_fraction 0".into()))
            }
            PriorSpec::Learned { .. } if c.plan.prior_fraction == 0.0 => {
                Err(Error::Config("a learned prior needs prior_fraction > 0".into()))
            }
            PriorSpec::Learned { train } => {
                if train.objective == Objective::QuadPosterior {
                    return Err(Error::Config("quad_posterior is not a prior objective".into()));
                }
                if train.validate && c.plan.prior_val_fraction == 0.0 {
                    return Err(Error::Config("prior validation needs prior_val_fraction > 0".into()));
                }
                train.validate()
            }
            PriorSpec::DataFree { .. } => Ok(()),
        }
    }

    /// SHA-256 over the canonical JSON of (dataset name, normalized config, seed).
    pub fn config_hash(&self, dataset: &str, seed: u64) -> String {
        let doc = serde_json::json!({
            "dataset": dataset,
            "config": self.normalized(),
            "seed": seed,
        });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }
}

/// Deterministic-network baseline trained on `S` minus a validation share.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub arch: Architecture,
    pub plan: PartitionPlan,
    /// Share of `S` held out for snapshot selection.
    pub val_fraction: f64,
    pub train: TrainConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            arch: Architecture::default(),
            plan: PartitionPlan {
                prior_fraction: 0.0,
                prior_val_fraction: 0.0,
                ..PartitionPlan::default()
            },
            val_fraction: 0.05,
            train: TrainConfig {
                objective: Objective::Erm,
                epochs: 100,
                ..TrainConfig::default()
            },
        }
    }
}

impl BaselineConfig {
    pub fn config_hash(&self, dataset: &str, seed: u64) -> String {
        let doc = serde_json::json!({ "dataset": dataset, "baseline": self, "seed": seed });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_parameter_counts() {
        let a = Architecture {
            hidden_units: 10,
            depth: 2,
        };
        assert_eq!(a.dims(57, 2), vec![57, 10, 10, 2]);
        // 57·10+10 + 10·10+10 + 10·2+2
        assert_eq!(a.num_params(57, 2), 712);
    }

    #[test]
    fn hash_depends_on_config_dataset_and_seed() {
        let c = RunConfig::default();
        let h = c.config_hash("spambase", 1);
        assert_eq!(h.len(), 64);
        assert_eq!(h, c.config_hash("spambase", 1));
        assert_ne!(h, c.config_hash("spambase", 2));
        assert_ne!(h, c.config_hash("mammography", 1));
        let other = RunConfig {
            sigma0: 0.01,
            ..c.clone()
        };
        assert_ne!(h, other.config_hash("spambase", 1));
    }

    #[test]
    fn prior_and_plan_must_agree() {
        assert!(RunConfig::default().validate().is_ok());
        let free = RunConfig {
            prior: PriorSpec::DataFree {
                center: PriorCenter::Random,
            },
            ..RunConfig::default()
        };
        assert!(matches!(free.validate(), Err(Error::Config(_))));
        let free = RunConfig {
            plan: PartitionPlan {
                prior_fraction: 0.0,
                ..PartitionPlan::default()
            },
            ..free
        };
        assert!(free.validate().is_ok());
        let learned_without_data = RunConfig {
            plan: free.plan.clone(),
            ..RunConfig::default()
        };
        assert!(matches!(learned_without_data.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let spec: DatasetSpec =
            serde_json::from_str(r#"{"kind":"tabular","path":"a.csv","label":{"name":"class"}}"#).unwrap();
        assert_eq!(
            spec,
            DatasetSpec::Tabular {
                path: "a.csv".into(),
                label: LabelColumn::Name("class".into())
            }
        );
    }
}
