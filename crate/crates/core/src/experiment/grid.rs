use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Architecture, PriorCenter, PriorSpec, RunConfig};
use super::pipeline::{run_pipeline, RunRecord};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::training::{Objective, TrainConfig};

/// Environment variable holding the number of worker threads for sweeps.
pub const THREADS_ENV: &str = "PBCERT_THREADS";

/// Axes of a hyperparameter sweep. Each cell starts from `base` and
/// overrides one value per axis; axes that do not apply to a cell's prior
/// objective are ignored and duplicate cells are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub base: RunConfig,
    pub sigma0: Vec<f64>,
    pub lr: Vec<f64>,
    pub momentum: Vec<f64>,
    pub prior_lr: Vec<f64>,
    pub prior_momentum: Vec<f64>,
    pub dropout_rate: Vec<f64>,
    pub kl_coeff: Vec<f64>,
    pub prior_fraction: Vec<f64>,
    pub prior_objective: Vec<Objective>,
    pub hidden_units: Vec<usize>,
    pub depth: Vec<usize>,
    pub seeds: Vec<u64>,
}

fn base_prior_train(base: &RunConfig) -> TrainConfig {
    match &base.prior {
        PriorSpec::Learned { train } => train.clone(),
        PriorSpec::DataFree { .. } => TrainConfig {
            objective: Objective::ErmDropout,
            epochs: 500,
            ..TrainConfig::default()
        },
    }
}

impl Default for GridSpec {
    /// A single cell: every axis holds the base configuration's value.
    fn default() -> Self {
        Self::single(RunConfig::default(), 0)
    }
}

impl GridSpec {
    pub fn single(base: RunConfig, seed: u64) -> Self {
        let prior = base_prior_train(&base);
        Self {
            sigma0: vec![base.sigma0],
            lr: vec![base.posterior.lr],
            momentum: vec![base.posterior.momentum],
            prior_lr: vec![prior.lr],
            prior_momentum: vec![prior.momentum],
            dropout_rate: vec![prior.dropout_rate],
            kl_coeff: vec![prior.kl_coeff.unwrap_or(1e-3)],
            prior_fraction: vec![base.plan.prior_fraction],
            prior_objective: vec![prior.objective],
            hidden_units: vec![base.arch.hidden_units],
            depth: vec![base.arch.depth],
            seeds: vec![seed],
            base,
        }
    }

    /// The full learned-prior sweep: 6 scales × 3 × 2 posterior optimizer
    /// settings × 3 × 2 prior optimizer settings × 4 dropout rates.
    pub fn full(base: RunConfig, seed: u64) -> Self {
        Self {
            sigma0: vec![0.1, 0.05, 0.04, 0.03, 0.02, 0.01],
            lr: vec![1e-3, 5e-3, 1e-2],
            momentum: vec![0.95, 0.99],
            prior_lr: vec![1e-3, 5e-3, 1e-2],
            prior_momentum: vec![0.95, 0.99],
            dropout_rate: vec![0.01, 0.05, 0.1, 0.2],
            kl_coeff: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
            prior_objective: vec![Objective::ErmDropout],
            ..Self::single(base, seed)
        }
    }

    fn check_axes(&self) -> Result<()> {
        let lens = [
            ("sigma0", self.sigma0.len()),
            ("lr", self.lr.len()),
            ("momentum", self.momentum.len()),
            ("prior_lr", self.prior_lr.len()),
            ("prior_momentum", self.prior_momentum.len()),
            ("dropout_rate", self.dropout_rate.len()),
            ("kl_coeff", self.kl_coeff.len()),
            ("prior_fraction", self.prior_fraction.len()),
            ("prior_objective", self.prior_objective.len()),
            ("hidden_units", self.hidden_units.len()),
            ("depth", self.depth.len()),
            ("seeds", self.seeds.len()),
        ];
        if let Some((name, _)) = lens.iter().find(|(_, n)| *n == 0) {
            return Err(Error::Config(format!("grid axis {name} is empty")));
        }
        Ok(())
    }

    /// Distinct cells in a fixed order.
    pub fn cells(&self) -> Result<Vec<GridCell>> {
        self.check_axes()?;
        let mut knobs = vec![Knobs::default()];
        expand(&mut knobs, &self.hidden_units, |k, v| k.hidden_units = v);
        expand(&mut knobs, &self.depth, |k, v| k.depth = v);
        expand(&mut knobs, &self.sigma0, |k, v| k.sigma0 = v);
        expand(&mut knobs, &self.lr, |k, v| k.lr = v);
        expand(&mut knobs, &self.momentum, |k, v| k.momentum = v);
        expand(&mut knobs, &self.prior_fraction, |k, v| k.prior_fraction = v);
        expand(&mut knobs, &self.prior_objective, |k, v| k.objective = v);
        expand(&mut knobs, &self.prior_lr, |k, v| k.prior_lr = v);
        expand(&mut knobs, &self.prior_momentum, |k, v| k.prior_momentum = v);
        expand(&mut knobs, &self.dropout_rate, |k, v| k.dropout_rate = v);
        expand(&mut knobs, &self.kl_coeff, |k, v| k.kl_coeff = v);
        expand(&mut knobs, &self.seeds, |k, v| k.seed = v);

        let base_train = base_prior_train(&self.base);
        let base_center = match &self.base.prior {
            PriorSpec::DataFree { center } => *center,
            PriorSpec::Learned { .. } => PriorCenter::Random,
        };
        let mut seen = HashSet::new();
        let mut cells = Vec::new();
        for k in knobs {
            let mut c = self.base.clone();
            c.arch = Architecture {
                hidden_units: k.hidden_units,
                depth: k.depth,
            };
            c.sigma0 = k.sigma0;
            c.posterior.lr = k.lr;
            c.posterior.momentum = k.momentum;
            c.plan.prior_fraction = k.prior_fraction;
            c.prior = if k.prior_fraction == 0.0 {
                PriorSpec::DataFree { center: base_center }
            } else {
                let mut t = base_train.clone();
                t.objective = k.objective;
                t.lr = k.prior_lr;
                t.momentum = k.prior_momentum;
                t.dropout_rate = if k.objective == Objective::ErmDropout {
                    k.dropout_rate
                } else {
                    0.0
                };
                t.kl_coeff = matches!(k.objective, Objective::Bbb | Objective::QuadPrior).then_some(k.kl_coeff);
                PriorSpec::Learned { train: t }
            };
            if seen.insert(c.config_hash("", k.seed)) {
                cells.push(GridCell {
                    config: c,
                    seed: k.seed,
                });
            }
        }
        Ok(cells)
    }
}

#[derive(Clone, Copy, Debug)]
struct Knobs {
    hidden_units: usize,
    depth: usize,
    sigma0: f64,
    lr: f64,
    momentum: f64,
    prior_fraction: f64,
    objective: Objective,
    prior_lr: f64,
    prior_momentum: f64,
    dropout_rate: f64,
    kl_coeff: f64,
    seed: u64,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            hidden_units: 0,
            depth: 0,
            sigma0: 0.0,
            lr: 0.0,
            momentum: 0.0,
            prior_fraction: 0.0,
            objective: Objective::Erm,
            prior_lr: 0.0,
            prior_momentum: 0.0,
            dropout_rate: 0.0,
            kl_coeff: 0.0,
            seed: 0,
        }
    }
}

/// Replaces each partial cell by one copy per value of the next axis.
fn expand<T: Copy>(knobs: &mut Vec<Knobs>, values: &[T], set: impl Fn(&mut Knobs, T)) {
    *knobs = knobs
        .iter()
        .flat_map(|k| {
            values.iter().map(|&v| {
                let mut k = *k;
                set(&mut k, v);
                k
            })
        })
        .collect();
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub config: RunConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Done { record: Box<RunRecord> },
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    #[serde(flatten)]
    pub status: CellStatus,
}

impl CellResult {
    pub fn record(&self) -> Option<&RunRecord> {
        match &self.status {
            CellStatus::Done { record } => Some(record),
            CellStatus::Failed { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    /// Sorted by config hash.
    pub cells: Vec<CellResult>,
    /// Hash of the best-by-certificate cell.
    pub best: Option<String>,
}

impl GridOutcome {
    pub fn records(&self) -> Vec<RunRecord> {
        self.cells.iter().filter_map(|c| c.record().cloned()).collect()
    }

    pub fn best_record(&self) -> Option<&RunRecord> {
        let hash = self.best.as_ref()?;
        self.cells
            .iter()
            .find(|c| &c.config_hash == hash)
            .and_then(CellResult::record)
    }
}

fn canonical(r: &RunRecord) -> String {
    serde_json::to_string(&r.config.normalized()).unwrap_or_default()
}

/// Lowest risk bound; ties go to the lexicographically smallest canonical
/// config, then the smallest seed. The result does not depend on order.
pub fn select_best(records: &[RunRecord]) -> Option<&RunRecord> {
    records.iter().min_by(|a, b| {
        a.certificate
            .risk_bound
            .total_cmp(&b.certificate.risk_bound)
            .then_with(|| canonical(a).cmp(&canonical(b)))
            .then(a.seed.cmp(&b.seed))
    })
}

/// Worker count from `PBCERT_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs every cell on a pool of `threads` workers (default: `PBCERT_THREADS`,
/// then all cores). Failing cells are recorded and do not stop the sweep.
/// When `out_root` is given, each finished run is persisted under it.
pub fn run_grid(ds: &Dataset, grid: &GridSpec, threads: Option<usize>, out_root: Option<&Path>) -> Result<GridOutcome> {
    let cells = grid.cells()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or_else(threads_from_env) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let mut results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let config_hash = cell.config.config_hash(&ds.name, cell.seed);
                let status = match run_pipeline(ds, &cell.config, cell.seed).and_then(|out| {
                    if let Some(root) = out_root {
                        out.persist(root)?;
                    }
                    Ok(out.record)
                }) {
                    Ok(record) => CellStatus::Done {
                        record: Box::new(record),
                    },
                    Err(e) => CellStatus::Failed { error: e.to_string() },
                };
                CellResult {
                    config_hash,
                    seed: cell.seed,
                    config: cell.config.clone(),
                    status,
                }
            })
            .collect()
    });
    results.sort_by(|a, b| a.config_hash.cmp(&b.config_hash));
    let records: Vec<RunRecord> = results.iter().filter_map(|c| c.record().cloned()).collect();
    let best = select_best(&records).map(|r| r.config_hash.clone());
    Ok(GridOutcome { cells: results, best })
}
