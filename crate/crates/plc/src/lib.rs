//! Experiment harness for partial label clustering: dataset files, TOML
//! experiment configs, seeded trial grids run in parallel, and CSV/JSON
//! result tables.
//!
//! The numerical method lives in [`plc_core`].

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod report;

pub use config::{BlobSpec, DatasetSpec, ExperimentConfig, LoadedData, Method, Protocol, ReportFormat};
pub use error::{Error, Result};
pub use experiment::{
    aggregate, run_experiment, sweep, Aggregate, CellTiming, ExperimentOutput, ResultRecord, SweepGrid, SweepOutput,
    SweepRow,
};
pub use report::{emit_report, read_records};
