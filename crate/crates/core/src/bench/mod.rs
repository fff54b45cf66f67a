//! End-to-end benchmark orchestration: every method on every dataset for
//! every seed, summarized into tables with paired significance tests.

pub mod config;
pub mod report;
pub mod run;

pub use config::{BenchConfig, BenchPlan, GnnParams, Method, Node2VecParams, Task};
pub use report::{
    emit_tables, parse_summary_csv, strip_timing, write_coords, BenchReport, Finding, RunRecord,
    TaskReport,
};
pub use run::{
    load_dataset, run_bench, run_classification_bench, run_clustering_bench, run_plan,
    PreparedDataset,
};
