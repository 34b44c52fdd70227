//! Experiment scenarios, metrics and sweeps.

pub mod figures;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod sweep;

pub use metrics::{MetricsRecord, SummaryRow};
pub use scenario::{build, build_scenario_a, build_scenario_b, build_scenario_c, run_seed};
pub use sim::{CbrSource, CwndTraceSample, RunOutcome, Simulation};
pub use sweep::{jobs, run_experiment, run_jobs, summarize, sweep, Job, RunResult};
