//! Experiment harness for the balancing meta-learner: configuration files,
//! the builtin experiment suite, parallel replication and CSV/JSON output.

pub mod builtin;
pub mod config;
pub mod error;
pub mod runner;
pub mod table;

pub use builtin::{builtin_experiment, BUILTIN_NAMES};
pub use config::{ExperimentConfig, LearnerEntry};
pub use error::{HarnessError, Result};
pub use runner::{run_experiment, ExperimentOutput, RunOptions, META_LABEL};
pub use table::{ResultRow, ResultTable, CSV_HEADER};
