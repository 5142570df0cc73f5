//! Index partitions of a dataset into test, prior-building and certification sets.
//!
//! ```text
//! dataset ─┬─ test                       (held out, never seen by the learner)
//!          └─ S ─┬─ prior set ─┬─ prior train
//!                │             └─ prior validation
//!                └─ cert
//! ```
//!
//! The posterior trains on all of `S`; the certificate only uses `cert`,
//! which is disjoint from everything the prior saw.

use serde::{Deserialize, Serialize};

use super::split::{stratified_split_indices, stratified_subsample};
use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionPlan {
    pub test_fraction: f64,
    /// Share of `S` used to build the prior; 0 means a data-free prior.
    pub prior_fraction: f64,
    /// Share of the prior set carved out for prior validation; 0 disables it.
    pub prior_val_fraction: f64,
    /// Use the dataset's official train/test boundary instead of a random test split.
    pub standard_split: bool,
    /// Keep only this stratified share of `S` (data-starvation runs).
    pub subsample_fraction: Option<f64>,
}

impl Default for PartitionPlan {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            prior_fraction: 0.5,
            prior_val_fraction: 0.05,
            standard_split: false,
            subsample_fraction: None,
        }
    }
}

impl PartitionPlan {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("test_fraction", self.test_fraction),
            ("prior_fraction", self.prior_fraction),
            ("prior_val_fraction", self.prior_val_fraction),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if let Some(f) = self.subsample_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("subsample_fraction must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub idx_test: Vec<usize>,
    pub idx_prior_train: Vec<usize>,
    pub idx_prior_val: Vec<usize>,
    pub idx_cert: Vec<usize>,
    /// Rows dropped by subsampling; empty otherwise.
    pub idx_unused: Vec<usize>,
}

impl Partition {
    /// All learner data: prior train ∪ prior validation ∪ cert, sorted.
    pub fn idx_s(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .idx_prior_train
            .iter()
            .chain(&self.idx_prior_val)
            .chain(&self.idx_cert)
            .copied()
            .collect();
        s.sort_unstable();
        s
    }

    pub fn idx_prior(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .idx_prior_train
            .iter()
            .chain(&self.idx_prior_val)
            .copied()
            .collect();
        p.sort_unstable();
        p
    }

    pub fn n_cert(&self) -> usize {
        self.idx_cert.len()
    }

    /// Checks disjointness and exact coverage of `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut owner: Vec<Option<&'static str>> = vec![None; n];
        let sets: [(&'static str, &Vec<usize>); 5] = [
            ("test", &self.idx_test),
            ("prior-train", &self.idx_prior_train),
            ("prior-val", &self.idx_prior_val),
            ("cert", &self.idx_cert),
            ("unused", &self.idx_unused),
        ];
        for (name, idx) in sets {
            for &i in idx {
                let slot = owner
                    .get_mut(i)
                    .ok_or_else(|| Error::Partition(format!("{name} index {i} outside dataset of {n}")))?;
                if let Some(prev) = slot {
                    return Err(Error::Partition(format!("row {i} is in both {prev} and {name}")));
                }
                *slot = Some(name);
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::Partition(format!("row {i} belongs to no set")));
        }
        Ok(())
    }

    /// Plain-text manifest listing every set's indices, one set per line.
    pub fn manifest(&self) -> String {
        let line = |name: &str, idx: &[usize]| {
            let body: Vec<String> = idx.iter().map(usize::to_string).collect();
            format!("{name}\t{}\t{}\n", idx.len(), body.join(","))
        };
        [
            line("test", &self.idx_test),
            line("prior_train", &self.idx_prior_train),
            line("prior_val", &self.idx_prior_val),
            line("cert", &self.idx_cert),
            line("unused", &self.idx_unused),
        ]
        .concat()
    }
}

pub fn make_partition(ds: &Dataset, plan: &PartitionPlan, rng: &SeededRng) -> Result<Partition> {
    plan.validate()?;
    let n = ds.len();
    let k = ds.num_classes;
    let all: Vec<usize> = (0..n).collect();

    let (idx_test, s) = if plan.standard_split {
        let n_train = ds
            .standard_train_len
            .ok_or_else(|| Error::Config(format!("{} has no standard train/test split", ds.name)))?;
        ((n_train..n).collect(), (0..n_train).collect::<Vec<_>>())
    } else if plan.test_fraction > 0.0 {
        stratified_split_indices(&all, &ds.y, k, plan.test_fraction, &mut rng.child("test-split"))?
    } else {
        (Vec::new(), all)
    };

    let (s, idx_unused) = match plan.subsample_fraction {
        Some(f) if f < 1.0 => {
            let kept = stratified_subsample(&s, &ds.y, k, f, &mut rng.child("subsample"))?;
            let mut keep = vec![false; n];
            kept.iter().for_each(|&i| keep[i] = true);
            let dropped = s.iter().copied().filter(|&i| !keep[i]).collect();
            (kept, dropped)
        }
        _ => (s, Vec::new()),
    };

    let (prior, idx_cert) = if plan.prior_fraction > 0.0 {
        stratified_split_indices(&s, &ds.y, k, plan.prior_fraction, &mut rng.child("prior-split"))?
    } else {
        (Vec::new(), s)
    };

    let (idx_prior_val, idx_prior_train) = if plan.prior_val_fraction > 0.0 && !prior.is_empty() {
        stratified_split_indices(
            &prior,
            &ds.y,
            k,
            plan.prior_val_fraction,
            &mut rng.child("prior-val-split"),
        )?
    } else {
        (Vec::new(), prior)
    };

    let p = Partition {
        idx_test,
        idx_prior_train,
        idx_prior_val,
        idx_cert,
        idx_unused,
    };
    p.validate(n)?;
    Ok(p)
}
