//! Experiment runner: environment × delay regime × algorithms × trials, exact
//! regret against the offline comparator, CSV and metadata output.

pub mod algorithms;
pub mod comparator;
pub mod config;
pub mod output;
pub mod run;

pub use algorithms::build_learner;
pub use comparator::{offline_comparator, Comparator};
pub use config::{load_config, parse_config, AlgoKind, AlgoSpec, ExperimentConfig};
pub use output::{emit_aggregate_csv, emit_csv, read_trace_csv, write_experiment};
pub use run::{
    aggregate, run_cell, run_experiment, run_learner, ExperimentResult, RegretTrace, RoundRecords, TrialSetup,
};
