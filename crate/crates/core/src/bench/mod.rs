//! Experiment harness: repeated stratified cross-validation, paired pooling
//! comparisons, train/eval/explain wrappers and full-model gradient checks.
//! The `attnmil` binary is a thin argument parser over this module.

mod commands;
mod config;
mod crossval;
mod report;

pub use commands::{
    evaluate_dataset, explain, explain_table, generate_synth, gradcheck_all, norm_path, train_full, write_synth,
    ExplainRow, GradCheckSettings, KindCheck, TrainedModel,
};
pub use config::{load_dataset, repeat_seed, run_seed, DataFormat, RunConfig};
pub use crossval::{compare, crossval, crossval_with_plans, fold_plans, prepare_split, Execution};
pub use report::{
    mean_and_std, table_path, write_comparison, write_report, Comparison, DatasetSummary, ExperimentReport,
    FoldReport, ARTIFACT_VERSION, REPORT_KIND,
};
