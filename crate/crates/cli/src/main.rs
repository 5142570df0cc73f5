mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pbcert::certify::CertificateRecord;
use pbcert::checkpoint::NetworkCheckpoint;
use pbcert::data::Dataset;
use pbcert::error::StageExt;
use pbcert::experiment::{
    emit_report, load_records, prepare, run_erm_baseline, run_grid, run_pipeline, GridSpec, Prepared, ReportFormat,
    RunConfig, RunRecord,
};
use pbcert::training::write_metrics;
use pbcert::{Error, Result};
use serde_json::{json, Value};

use config::{overlay, read_document, DataArgs, RunArgs};

#[derive(Parser, Debug)]
#[command(
    name = "pbcert",
    version,
    about = "Train probabilistic networks with PAC-Bayes objectives and certify their risk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON or TOML document; its sections override the flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output root for runs/ and reports/.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the prior for a run and save it.
    TrainPrior {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Train the posterior from a saved prior.
    TrainPosterior {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        prior_checkpoint: PathBuf,
    },
    /// Compute the risk certificate of a saved posterior.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        prior_checkpoint: PathBuf,
        #[arg(long, value_name = "FILE")]
        posterior_checkpoint: PathBuf,
    },
    /// Full pipeline: partition, prior, posterior, certificate, test evaluation.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Grid sweep; axes come from the [grid] section of --config.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Start from the full published grid instead of a single cell.
        #[arg(long)]
        full_grid: bool,
        /// Worker threads (default: PBCERT_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Deterministic ERM baseline.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Tables and plot data from saved run records.
    Report {
        /// Records file; default collects <out>/runs/*/record.json.
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Vec<FormatArg>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    TableCsv,
    RecordsJson,
    ScatterCsv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::TableCsv => ReportFormat::TableCsv,
            FormatArg::RecordsJson => ReportFormat::RecordsJson,
            FormatArg::ScatterCsv => ReportFormat::ScatterCsv,
        }
    }
}

struct Loaded {
    doc: Option<Value>,
    dataset: Dataset,
}

fn load(common: &Common) -> Result<Loaded> {
    let doc = common
        .config
        .as_deref()
        .map(read_document)
        .transpose()
        .stage("config")?;
    let spec = common.data.spec(doc.as_ref()).stage("config")?;
    let dataset = spec.load().stage("load")?;
    Ok(Loaded { doc, dataset })
}

fn run_config(common: &Common, doc: Option<&Value>) -> Result<RunConfig> {
    overlay(&common.run.run_config(), doc, "run").stage("config")
}

fn print(v: &Value) {
    println!("{v}");
}

fn run_dir(out: &Path, prep: &Prepared) -> Result<PathBuf> {
    let dir = out.join("runs").join(prep.config_hash());
    fs::create_dir_all(dir.join("checkpoints"))?;
    Ok(dir)
}

fn prepared(common: &Common, seed: u64) -> Result<Prepared> {
    let l = load(common)?;
    let cfg = run_config(common, l.doc.as_ref())?;
    prepare(&l.dataset, &cfg, seed)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainPrior { common, seed } => {
            let prep = prepared(&common, seed)?;
            let stage = prep.train_prior()?;
            let dir = run_dir(&common.out, &prep)?;
            let path = dir.join("checkpoints").join("prior.pbnn");
            NetworkCheckpoint::from_prior(&stage.prior, seed).save(&path)?;
            fs::write(dir.join("partition.tsv"), prep.partition.manifest())?;
            write_metrics(&stage.metrics, fs::File::create(dir.join("prior_metrics.jsonl"))?)?;
            print(&json!({
                "prior": path,
                "best_epoch": stage.best_epoch,
                "val_error": stage.val_error,
                "n_cert": prep.partition.n_cert(),
            }));
        }
        Command::TrainPosterior {
            common,
            seed,
            prior_checkpoint,
        } => {
            let prep = prepared(&common, seed)?;
            let prior = NetworkCheckpoint::load(&prior_checkpoint).stage("load")?.to_prior();
            let post = prep.train_posterior(&prior)?;
            let dir = run_dir(&common.out, &prep)?;
            let path = dir.join("checkpoints").join("posterior.pbnn");
            NetworkCheckpoint::new(post.network.clone(), prior.sigma0(), seed).save(&path)?;
            fs::write(
                dir.join("checkpoints.json"),
                serde_json::to_string_pretty(&post.checkpoints)?,
            )?;
            write_metrics(&post.metrics, fs::File::create(dir.join("posterior_metrics.jsonl"))?)?;
            print(&json!({
                "posterior": path,
                "best_epoch": post.best_epoch,
                "kl": post.network.kl_to_prior(&prior)?,
            }));
        }
        Command::Certify {
            common,
            seed,
            prior_checkpoint,
            posterior_checkpoint,
        } => {
            let prep = prepared(&common, seed)?;
            let prior = NetworkCheckpoint::load(&prior_checkpoint).stage("load")?.to_prior();
            let post = NetworkCheckpoint::load(&posterior_checkpoint).stage("load")?;
            let certificate = prep.certify(&prior, &post.network)?;
            let record = CertificateRecord {
                certificate,
                config_hash: prep.config_hash(),
                seed,
            };
            let dir = run_dir(&common.out, &prep)?;
            fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&record)?)?;
            print(&serde_json::to_value(&record)?);
        }
        Command::Run { common, seed } => {
            let l = load(&common)?;
            let cfg = run_config(&common, l.doc.as_ref())?;
            let out = run_pipeline(&l.dataset, &cfg, seed)?;
            let dir = out.persist(&common.out)?;
            let r = &out.record;
            print(&json!({
                "record": dir.join("record.json"),
                "config_hash": r.config_hash,
                "risk_bound": r.certificate.risk_bound,
                "kl_per_n": r.certificate.kl_per_n,
                "stochastic_test_error": r.posterior.stochastic_test_error,
            }));
        }
        Command::Sweep {
            common,
            seed,
            full_grid,
            threads,
        } => {
            let l = load(&common)?;
            let base = run_config(&common, l.doc.as_ref())?;
            let start = if full_grid {
                GridSpec::full(base, seed)
            } else {
                GridSpec::single(base, seed)
            };
            let grid: GridSpec = overlay(&start, l.doc.as_ref(), "grid").stage("config")?;
            let n = grid.cells().stage("config")?.len();
            eprintln!("sweep: {n} cells");
            let outcome = run_grid(&l.dataset, &grid, threads, Some(&common.out))?;
            let reports = common.out.join("reports");
            fs::create_dir_all(&reports)?;
            fs::write(reports.join("sweep.json"), serde_json::to_string_pretty(&outcome)?)?;
            let records = outcome.records();
            if !records.is_empty() {
                for f in [
                    ReportFormat::TableCsv,
                    ReportFormat::ScatterCsv,
                    ReportFormat::RecordsJson,
                ] {
                    emit_report(&records, f, &reports)?;
                }
            }
            let failed = outcome.cells.len() - records.len();
            let best = outcome.best_record();
            print(&json!({
                "cells": outcome.cells.len(),
                "failed": failed,
                "best": best.map(|r| &r.config_hash),
                "best_risk_bound": best.map(|r| r.certificate.risk_bound),
            }));
        }
        Command::Baseline { common, seed } => {
            let l = load(&common)?;
            let cfg = overlay(&common.run.baseline_config(), l.doc.as_ref(), "baseline").stage("config")?;
            let record = run_erm_baseline(&l.dataset, &cfg, seed)?;
            let dir = common.out.join("baselines");
            fs::create_dir_all(&dir)?;
            fs::write(
                dir.join(format!("{}.json", record.config_hash)),
                serde_json::to_string_pretty(&record)?,
            )?;
            print(&serde_json::to_value(&record)?);
        }
        Command::Report { records, format, out } => {
            let records = match records {
                Some(path) => load_records(path).stage("load")?,
                None => collect_records(&out.join("runs")).stage("load")?,
            };
            let formats: Vec<ReportFormat> = if format.is_empty() {
                vec![
                    ReportFormat::TableCsv,
                    ReportFormat::RecordsJson,
                    ReportFormat::ScatterCsv,
                ]
            } else {
                format.into_iter().map(Into::into).collect()
            };
            let dir = out.join("reports");
            for f in formats {
                let path = emit_report(&records, f, &dir).stage("report")?;
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn collect_records(runs: &Path) -> Result<Vec<RunRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(runs)?
        .filter_map(|e| e.ok().map(|e| e.path().join("record.json")))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no run records under {}", runs.display())));
    }
    paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?))
        .collect()
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
