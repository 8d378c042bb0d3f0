use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::DspConfig;
use crate::dtc::DtcConfig;
use crate::injection::InjectionConfig;
use crate::machine::{MachineParams, MagnetHfModel};
use crate::thermal::{RMag0Table, TempCoefficients, ThermalPlantParams};
use crate::{Error, Result, CONTROL_PERIOD};

/// Full scenario description, loaded from TOML. Every section and key is
/// optional; missing values take the defaults below.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub machine: MachineParams,
    pub magnet: MagnetHfModel,
    pub dtc: DtcConfig,
    pub injection: InjectionConfig,
    pub dsp: DspConfig,
    pub thermal: ThermalConfig,
    pub run: RunConfig,
    pub noise: NoiseConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalConfig {
    pub alpha_cu: f64,
    pub alpha_mag: f64,
    /// Reference temperature of the resistance models (degC).
    pub t0: f64,
    pub t_ambient: f64,
    pub r_mag0: RMag0Table,
    pub plant: ThermalPlantParams,
    /// Estimates outside this range are flagged.
    pub plausible_range: [f64; 2],
    /// Magnet background eddy loss: conductivity (S/m), lamination thickness
    /// (m), harmonic flux density amplitude (T), harmonic order relative to
    /// the fundamental, and magnet volume (m^3).
    pub magnet_sigma: f64,
    pub magnet_thickness: f64,
    pub harmonic_flux_density: f64,
    pub harmonic_order: f64,
    pub magnet_volume: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            alpha_cu: 0.00393,
            alpha_mag: 0.0012,
            t0: 25.0,
            t_ambient: 25.0,
            r_mag0: RMag0Table::default(),
            plant: ThermalPlantParams::default(),
            plausible_range: [-40.0, 200.0],
            magnet_sigma: 1.0 / 1.4e-6,
            magnet_thickness: 5.0e-3,
            harmonic_flux_density: 0.05,
            harmonic_order: 6.0,
            magnet_volume: 2.0e-5,
        }
    }
}

impl ThermalConfig {
    pub fn coefficients(&self, r_s0: f64, rpm: f64) -> TempCoefficients {
        TempCoefficients {
            alpha_cu: self.alpha_cu,
            alpha_mag: self.alpha_mag,
            t0: self.t0,
            r_s0,
            r_mag0: self.r_mag0.at(rpm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.r_mag0.validate()?;
        self.plant.validate()?;
        self.coefficients(1.0, self.r_mag0.rpm[0]).validate()?;
        if !self.t_ambient.is_finite() {
            return Err(Error::config("thermal.t_ambient must be finite"));
        }
        if !(self.plausible_range[0] < self.plausible_range[1]) {
            return Err(Error::config("thermal.plausible_range must be [low, high] with low < high"));
        }
        for (name, v) in [
            ("thermal.magnet_sigma", self.magnet_sigma),
            ("thermal.magnet_thickness", self.magnet_thickness),
            ("thermal.harmonic_flux_density", self.harmonic_flux_density),
            ("thermal.harmonic_order", self.harmonic_order),
            ("thermal.magnet_volume", self.magnet_volume),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Electrical integrator step (s); must divide the 50 us control period.
    pub dt_s: f64,
    pub duration_s: f64,
    pub speed_setpoint_rpm: f64,
    pub load_pct_of_rated: f64,
    pub seed: u64,
    /// Log rows per second of simulated time; must divide the control rate.
    pub log_rate_hz: f64,
    /// Log every control period, overriding `log_rate_hz`.
    pub raw_log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dt_s: 1.0e-5,
            duration_s: 20.0,
            speed_setpoint_rpm: 600.0,
            load_pct_of_rated: 100.0,
            seed: 0,
            log_rate_hz: 1000.0,
            raw_log: false,
        }
    }
}

impl RunConfig {
    /// Electrical substeps per control period.
    pub fn substeps(&self) -> Result<u32> {
        integer_ratio(CONTROL_PERIOD, self.dt_s)
            .ok_or_else(|| Error::config(format!("run.dt_s = {} does not divide the 50 us control period", self.dt_s)))
    }

    /// Control periods per log row.
    pub fn decimation(&self) -> Result<u32> {
        if self.raw_log {
            return Ok(1);
        }
        integer_ratio(1.0 / self.log_rate_hz, CONTROL_PERIOD).ok_or_else(|| {
            Error::config(format!(
                "run.log_rate_hz = {} must divide the 20 kHz control rate",
                self.log_rate_hz
            ))
        })
    }

    pub fn control_steps(&self) -> u64 {
        (self.duration_s / CONTROL_PERIOD + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(Error::config("run.dt_s must be > 0"));
        }
        self.substeps()?;
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(Error::config("run.duration_s must be >= 0"));
        }
        if !(self.speed_setpoint_rpm.is_finite() && self.speed_setpoint_rpm > 0.0) {
            return Err(Error::config("run.speed_setpoint_rpm must be > 0"));
        }
        if !(self.load_pct_of_rated.is_finite() && self.load_pct_of_rated >= 0.0 && self.load_pct_of_rated <= 200.0) {
            return Err(Error::config("run.load_pct_of_rated must lie in [0, 200]"));
        }
        if !(self.log_rate_hz.is_finite() && self.log_rate_hz > 0.0) {
            return Err(Error::config("run.log_rate_hz must be > 0"));
        }
        self.decimation()?;
        Ok(())
    }
}

fn integer_ratio(num: f64, den: f64) -> Option<u32> {
    let r = num / den;
    let k = r.round();
    (k >= 1.0 && (r - k).abs() < 1e-6).then_some(k as u32)
}

/// Seeded Gaussian measurement noise. Off by default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Standard deviation of each phase-current sample (A).
    pub current_std: f64,
    /// Standard deviation of the DC-bus voltage sample (V).
    pub vdc_std: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            enabled: false,
            current_std: 0.005,
            vdc_std: 0.5,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.current_std.is_finite() && self.current_std >= 0.0 && self.vdc_std.is_finite() && self.vdc_std >= 0.0) {
            return Err(Error::config("noise standard deviations must be >= 0"));
        }
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.machine.validate()?;
        self.magnet.validate()?;
        self.dtc.resolved(&self.machine).validate()?;
        self.injection.validate()?;
        self.dsp.validate()?;
        self.thermal.validate()?;
        self.run.validate()?;
        self.noise.validate()?;
        Ok(())
    }
}
