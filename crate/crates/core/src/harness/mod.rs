//! Scenario configuration, the fixed-step simulation loop, and output files.

mod config;
mod log;
mod scenario;
mod summary;

pub use config::{NoiseConfig, RunConfig, ScenarioConfig, ThermalConfig};
pub use log::{emit_csv, format_csv, parse_csv, parse_csv_str, LogRow, RunLog, CSV_HEADER};
pub use scenario::{run_scenario, run_scenario_with_tap, sweep_speeds, RunOutput, TapFn};
pub use summary::{emit_summary, FluxStats, RunSummary, WindowSummary};
