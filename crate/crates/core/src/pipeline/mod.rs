//! End-to-end runs: configuration, the synthetic ten-ion experiment,
//! windowing and counting of detector clicks, tomography and report files.

pub mod config;
pub mod experiment;
pub mod records;
pub mod report;
pub mod windows;

pub use config::RunConfig;
pub use experiment::{run_experiment, sample_attempts, Experiment, NodeModel};
pub use records::{read_outcomes_csv, write_outcomes_csv, ClickLog, ClickRecord, OutcomeRecord};
pub use report::{
    analyze_logs, emit_report, simulate, verify_report, write_logs, ModelArtifacts, RunArtifacts,
};
pub use windows::{
    build_count_table, histogram, window_counts, Histogram, WindowCounts, WindowSpec,
};
