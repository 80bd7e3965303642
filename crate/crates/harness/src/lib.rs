//! Cross-validation harness: configuration, fits, rate estimates, the six
//! experiments and the acceptance checks they carry.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod rate;
pub mod report;

pub use config::{Config, ConfigError, ExperimentId};
pub use experiments::{run_criterion, run_experiment, verify, HarnessError, Setup};
pub use report::{Criterion, Report, Row};
