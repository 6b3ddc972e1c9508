//! Experiment orchestration: configuration, seeded run matrices, record
//! files, aggregation and plot data.

pub mod aggregate;
pub mod config;
pub mod presets;
pub mod records;
pub mod run;

pub use aggregate::{aggregate, emit_plot_data, AggregateSeries, Series, XAxis};
pub use config::{load_config, Cell, ExperimentConfig, RunConfig, SweepAxis, SweepParameter, SweepValue};
pub use records::{read_record, write_record, RecordHeader};
pub use run::{run_experiment, run_experiment_in, run_seed, summarize_dir, ExperimentSummary, WindowStat};
