//! Scenario files, seeded Monte-Carlo runs and result files.

mod config;
mod output;
mod run;

pub use config::{load_config, ConfigFile, ExperimentFile, ExperimentKind, ExperimentSpec, Method, Scale, ScenarioFile};
pub use output::{
    summarize, write_metadata, write_outputs, write_patterns, write_results, write_summary, SummaryRow, METADATA_FILE,
    PATTERN_FILE, RESULTS_FILE, SUMMARY_FILE,
};
pub use run::{run_experiment, run_seed, splitmix64, ArraySide, Beampattern, ExperimentResults, ResultRow, RunOptions};
