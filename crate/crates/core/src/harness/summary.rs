use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::injection::InjectionMode;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub index: u64,
    pub start_s: f64,
    pub end_s: f64,
    /// Estimates at or after the settle time.
    pub settled_samples: u64,
    /// Mean extracted HF resistance over settled estimates (ohm).
    pub mean_r_hf: Option<f64>,
    /// Mean of the plant's stator + magnet resistance over the same samples.
    pub mean_plant_r_hf: Option<f64>,
    pub final_r_hf: Option<f64>,
    /// Time from window start after which the estimate stays within 5% of
    /// its final value (s).
    pub settling_time_s: Option<f64>,
    pub max_abs_temp_error_c: Option<f64>,
    pub out_of_range_estimates: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxStats {
    pub samples: u64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub center_alpha: f64,
    pub center_beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub speed_rpm: f64,
    pub load_pct_of_rated: f64,
    pub mode: InjectionMode,
    pub harmonic_order: u32,
    pub injection_magnitude_a: f64,
    pub injection_frequency_hz: f64,
    pub dft_window_samples: usize,
    /// Worst-case relative image leakage of the rounded DFT window (0 if exact).
    pub leakage_bound: f64,
    pub thermal_compression: f64,
    pub duration_s: f64,
    pub control_steps: u64,
    pub log_decimation: u32,
    pub lambda_ref: f64,
    pub flux_band: f64,
    /// Stator plus magnet resistance at the reference temperature (ohm).
    pub plant_r_hf_at_t0: f64,
    pub windows: Vec<WindowSummary>,
    pub max_abs_temp_error_c: Option<f64>,
    /// Largest speed deviation during injection, after the first 0.5 s (% of setpoint).
    pub max_speed_deviation_pct: f64,
    /// Estimated flux trajectory away from injection windows.
    pub base_flux: Option<FluxStats>,
    /// Estimated flux trajectory inside injection windows.
    pub injected_flux: Option<FluxStats>,
    pub final_t_s: f64,
    pub final_t_r: f64,
}

pub fn emit_summary<T: Serialize + ?Sized>(summary: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
