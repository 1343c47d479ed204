//! Experiment orchestration: configuration, the cross-validated run, and
//! report post-processing.

mod compare;
mod config;
mod figures;
mod run;

pub use compare::{compare_reports, MetricDelta, ReportDiff};
pub use config::{
    ConstitutionTasks, EmbeddingSource, ExperimentConfig, ModelOptions, Precision, SamplingOptions,
    TaskSelection, TrainOptions,
};
pub use figures::export_figure_data;
pub use run::{run_experiment, Failure, RunReport};
