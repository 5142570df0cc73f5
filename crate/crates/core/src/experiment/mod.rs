//! Run assembly, sweeps, baselines and report emission.

mod config;
mod grid;
mod pipeline;
mod report;

pub use config::{Architecture, BaselineConfig, DatasetSpec, PriorCenter, PriorSpec, RunConfig};
pub use grid::{
    run_grid, select_best, threads_from_env, CellResult, CellStatus, GridCell, GridOutcome, GridSpec, THREADS_ENV,
};
pub use pipeline::{
    prepare, run_erm_baseline, run_pipeline, standardize_on, test_errors, ErmBaselineRecord, PartitionSizes,
    PipelineOutput, PosteriorMetrics, Prepared, PriorMetrics, PriorStage, RunRecord,
};
pub use report::{emit_report, load_records, prior_label, render_records, render_scatter, render_table, ReportFormat};
