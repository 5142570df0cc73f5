use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::select_best;
use super::pipeline::RunRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    TableCsv,
    RecordsJson,
    ScatterCsv,
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::TableCsv => "table.csv",
            ReportFormat::RecordsJson => "records.json",
            ReportFormat::ScatterCsv => "scatter.csv",
        }
    }
}

/// Row label for a prior share, e.g. "Data-free (0%)" or "Data-depend. (50%)".
pub fn prior_label(prior_fraction: f64) -> String {
    let pct = (prior_fraction * 100.0).round() as i64;
    if pct == 0 {
        "Data-free (0%)".into()
    } else {
        format!("Data-depend. ({pct}%)")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.5}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// One row per (dataset, prior share), holding the best-by-certificate run.
pub fn render_table(records: &[RunRecord]) -> Result<String> {
    let mut groups: BTreeMap<(String, i64), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.dataset.clone(),
            (r.config.plan.prior_fraction * 1000.0).round() as i64,
        );
        groups.entry(key).or_default().push(r.clone());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "setup",
        "prior_objective",
        "runs",
        "n_cert",
        "risk_cert",
        "stch_01_err",
        "post_mean_01_err",
        "prior_mean_01_err",
        "kl_per_n",
        "sigma0",
        "config_hash",
    ])?;
    for ((dataset, _), group) in &groups {
        let best = select_best(group).expect("groups are non-empty");
        w.write_record([
            dataset.clone(),
            prior_label(best.config.plan.prior_fraction),
            best.prior.kind.clone(),
            group.len().to_string(),
            best.sizes.cert.to_string(),
            format!("{:.5}", best.certificate.risk_bound),
            opt(best.posterior.stochastic_test_error),
            opt(best.posterior.mean_test_error),
            opt(best.prior.mean_test_error),
            format!("{:.3e}", best.certificate.kl_per_n),
            best.config.sigma0.to_string(),
            best.config_hash.clone(),
        ])?;
    }
    finish(w)
}

/// `(risk_cert, stoch_01, prior_mean_01, kl_per_n)` per run, for scatter plots.
pub fn render_scatter(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "risk_cert",
        "stoch_01",
        "prior_mean_01",
        "kl_per_n",
        "config_hash",
        "seed",
    ])?;
    for r in records {
        w.write_record([
            r.certificate.risk_bound.to_string(),
            r.posterior
                .stochastic_test_error
                .map_or_else(String::new, |v| v.to_string()),
            r.prior.mean_test_error.map_or_else(String::new, |v| v.to_string()),
            r.certificate.kl_per_n.to_string(),
            r.config_hash.clone(),
            r.seed.to_string(),
        ])?;
    }
    finish(w)
}

pub fn render_records(records: &[RunRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes one report into `dir` and returns its path.
pub fn emit_report(records: &[RunRecord], format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::Data("no records to report".into()));
    }
    let body = match format {
        ReportFormat::TableCsv => render_table(records)?,
        ReportFormat::RecordsJson => render_records(records)?,
        ReportFormat::ScatterCsv => render_scatter(records)?,
    };
    fs::create_dir_all(dir)?;
    let path = dir.join(format.file_name());
    fs::write(&path, body)?;
    Ok(path)
}
