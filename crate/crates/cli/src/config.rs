use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pbcert::data::{LabelColumn, PartitionPlan};
use pbcert::experiment::{Architecture, BaselineConfig, DatasetSpec, PriorCenter, PriorSpec, RunConfig};
use pbcert::training::{Objective, TrainConfig};
use pbcert::{Error, Result};
use serde::de::DeserializeOwned;
use serde_json::Value;

/// A structured config document, JSON or TOML (chosen by extension), with
/// optional `dataset`, `run`, `grid` and `baseline` sections.
pub fn read_document(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        let doc: toml::Value = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::to_value(doc)?)
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Recursively overlays `over` onto `base`; objects merge key by key,
/// anything else is replaced.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Serializes `base`, overlays `section` of the document, and parses the result.
pub fn overlay<T: serde::Serialize + DeserializeOwned>(base: &T, doc: Option<&Value>, section: &str) -> Result<T> {
    let mut v = serde_json::to_value(base)?;
    if let Some(over) = doc.and_then(|d| d.get(section)) {
        merge(&mut v, over);
    }
    serde_json::from_value(v).map_err(|e| Error::Config(format!("[{section}] {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PriorChoice {
    DataFreeRandom,
    DataFreeZero,
    Erm,
    ErmDropout,
    Mixup,
    Bbb,
    QuadPrior,
}

#[derive(Args, Debug, Default)]
pub struct DataArgs {
    /// Comma-separated file with a header row.
    #[arg(long, value_name = "CSV", conflicts_with = "mnist")]
    pub data: Option<PathBuf>,
    /// Name of the label column (default: last column).
    #[arg(long, conflicts_with = "label_index")]
    pub label: Option<String>,
    /// Zero-based index of the label column.
    #[arg(long)]
    pub label_index: Option<usize>,
    /// Directory holding the four MNIST IDX files.
    #[arg(long, value_name = "DIR")]
    pub mnist: Option<PathBuf>,
}

impl DataArgs {
    pub fn spec(&self, doc: Option<&Value>) -> Result<DatasetSpec> {
        if let Some(path) = &self.data {
            let label = match (&self.label, self.label_index) {
                (Some(name), _) => LabelColumn::Name(name.clone()),
                (None, Some(i)) => LabelColumn::Index(i),
                (None, None) => LabelColumn::Last,
            };
            return Ok(DatasetSpec::Tabular {
                path: path.clone(),
                label,
            });
        }
        if let Some(dir) = &self.mnist {
            return Ok(DatasetSpec::Mnist { dir: dir.clone() });
        }
        match doc.and_then(|d| d.get("dataset")) {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("[dataset] {e}"))),
            None => Err(Error::Config(
                "no dataset given: use --data, --mnist or a [dataset] section".into(),
            )),
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub hidden_units: Option<usize>,
    /// Number of hidden layers.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Prior scale.
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub prior_fraction: Option<f64>,
    #[arg(long)]
    pub prior_val_fraction: Option<f64>,
    /// Keep only this stratified share of the training data.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Use the dataset's official train/test boundary.
    #[arg(long)]
    pub standard_split: bool,
    #[arg(long, value_enum)]
    pub prior: Option<PriorChoice>,
    #[arg(long)]
    pub prior_epochs: Option<usize>,
    #[arg(long)]
    pub prior_lr: Option<f64>,
    #[arg(long)]
    pub prior_momentum: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub mixup_alpha: Option<f64>,
    /// KL trade-off for bbb and quad-prior priors.
    #[arg(long)]
    pub kl_coeff: Option<f64>,
    /// Posterior epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Posterior learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Posterior momentum.
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Skip prior validation and posterior checkpoint selection.
    #[arg(long)]
    pub no_validate: bool,
    /// Monte-Carlo draws for the final certificate.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub checkpoint_mc_samples: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub delta_prime: Option<f64>,
    /// Wall-clock limit per run, in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunArgs {
    fn plan(&self, plan: &mut PartitionPlan) {
        set(&mut plan.test_fraction, self.test_fraction);
        set(&mut plan.prior_fraction, self.prior_fraction);
        set(&mut plan.prior_val_fraction, self.prior_val_fraction);
        if self.subsample.is_some() {
            plan.subsample_fraction = self.subsample;
        }
        plan.standard_split |= self.standard_split;
    }

    fn arch(&self, arch: &mut Architecture) {
        set(&mut arch.hidden_units, self.hidden_units);
        set(&mut arch.depth, self.depth);
    }

    fn prior_train(&self, t: &mut TrainConfig) {
        set(&mut t.epochs, self.prior_epochs);
        set(&mut t.lr, self.prior_lr);
        set(&mut t.momentum, self.prior_momentum);
        set(&mut t.dropout_rate, self.dropout);
        set(&mut t.mixup_alpha, self.mixup_alpha);
        set(&mut t.batch_size, self.batch_size);
        if self.kl_coeff.is_some() {
            t.kl_coeff = self.kl_coeff;
        }
        if self.no_validate {
            t.validate = false;
        }
    }

    /// Defaults with the flags applied.
    pub fn run_config(&self) -> RunConfig {
        let mut c = RunConfig::default();
        self.arch(&mut c.arch);
        self.plan(&mut c.plan);
        set(&mut c.sigma0, self.sigma0);
        let mut train = match &c.prior {
            PriorSpec::Learned { train } => train.clone(),
            PriorSpec::DataFree { .. } => TrainConfig::default(),
        };
        match self.prior {
            Some(PriorChoice::DataFreeRandom) => {
                c.prior = PriorSpec::DataFree {
                    center: PriorCenter::Random,
                }
            }
            Some(PriorChoice::DataFreeZero) => {
                c.prior = PriorSpec::DataFree {
                    center: PriorCenter::Zero,
                }
            }
            other => {
                if let Some(choice) = other {
                    train.objective = match choice {
                        PriorChoice::Erm => Objective::Erm,
                        PriorChoice::ErmDropout => Objective::ErmDropout,
                        PriorChoice::Mixup => Objective::Mixup,
                        PriorChoice::Bbb => Objective::Bbb,
                        _ => Objective::QuadPrior,
                    };
                }
                self.prior_train(&mut train);
                c.prior = PriorSpec::Learned { train };
            }
        }
        if matches!(c.prior, PriorSpec::DataFree { .. }) && self.prior_fraction.is_none() {
            c.plan.prior_fraction = 0.0;
        }
        set(&mut c.posterior.epochs, self.epochs);
        set(&mut c.posterior.lr, self.lr);
        set(&mut c.posterior.momentum, self.momentum);
        set(&mut c.posterior.batch_size, self.batch_size);
        set(&mut c.posterior.checkpoint_mc_samples, self.checkpoint_mc_samples);
        if self.no_validate {
            c.posterior.validate = false;
        }
        set(&mut c.certify.m, self.mc_samples);
        set(&mut c.certify.delta, self.delta);
        set(&mut c.certify.delta_prime, self.delta_prime);
        if self.timeout.is_some() {
            c.timeout_secs = self.timeout;
        }
        c
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        let mut c = BaselineConfig::default();
        self.arch(&mut c.arch);
        set(&mut c.plan.test_fraction, self.test_fraction);
        c.plan.standard_split |= self.standard_split;
        if self.subsample.is_some() {
            c.plan.subsample_fraction = self.subsample;
        }
        set(&mut c.train.epochs, self.epochs);
        set(&mut c.train.lr, self.lr);
        set(&mut c.train.momentum, self.momentum);
        set(&mut c.train.batch_size, self.batch_size);
        if self.no_validate {
            c.train.validate = false;
        }
        c
    }
}
