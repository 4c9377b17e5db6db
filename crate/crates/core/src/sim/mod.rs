//! Closed-loop intersection simulation, Monte Carlo batches and persistence.

pub mod batch;
pub mod config;
pub mod episode;
pub mod io;

pub use batch::{run_batch, run_seed, RunSummary, SweepSummary};
pub use config::{AvPolicy, ScenarioConfig, SimConfig};
pub use episode::{run_episode, Arrival, LogRow, Outcome, RunRecord};
pub use io::{read_run_log, read_summary, write_json, write_run_log, write_summary, CSV_COLUMNS};
