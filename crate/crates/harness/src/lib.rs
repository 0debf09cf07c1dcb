//! Experiment harness for the `vrpca` solvers: dataset files, seeded
//! solve runs with JSON reports, baseline comparisons and geometry reports.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;

pub use compare::{compare_baselines, ComparisonReport};
pub use config::{BurnInSettings, DatasetSource, ExperimentConfig, InitChoice, SolverChoice, SyntheticSource};
pub use error::{HarnessError, Result};
pub use experiment::{read_trace, run_experiment, runtime_model, write_trace, ExperimentReport, RunReport};
pub use geometry::{geometry_report, GeometryReport};
pub use io::{load_dataset, parse_binary, save_dataset, DatasetFormat};
