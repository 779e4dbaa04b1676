//! Experiment runner for the cosparse reconstruction algorithms.
//!
//! An [`ExperimentSpec`] names one algorithm, a compression-ratio grid and an
//! input corpus. [`run_experiment`] compresses every segment at every ratio
//! with a seeded sensing matrix, reconstructs it and returns one
//! [`RunRecord`] per (segment, channel, ratio). [`summarize`] reduces records
//! to boxplot rows and [`emit`] writes both as CSV or JSON.

mod error;
mod output;
mod runner;
pub mod settings;
mod spec;
mod summary;

pub use error::{BenchError, Result};
pub use output::{emit, read_records, write_summaries, Format, RECORD_COLUMNS, SCHEMA_VERSION, SUMMARY_COLUMNS};
pub use runner::{derive_seed, run_experiment, RunOutcome, RunRecord, SegmentFailure};
pub use spec::{Algorithm, ExperimentSpec, InputSpec, SEGMENT_SECONDS};
pub use summary::{summarize, GroupKey, GroupSummary, Metric};
