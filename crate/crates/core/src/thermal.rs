//! Resistance extraction, rotor temperature inversion and the two-node
//! thermal plant used as ground truth.

use serde::{Deserialize, Serialize};

use crate::dsp::PhasorEstimate;
use crate::{Error, Result};

/// Temperature coefficients of the linear resistance models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TempCoefficients {
    pub alpha_cu: f64,
    /// Stator-reflected magnet coefficient (1/degC).
    pub alpha_mag: f64,
    pub t0: f64,
    pub r_s0: f64,
    pub r_mag0: f64,
}

impl TempCoefficients {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_cu", self.alpha_cu),
            ("alpha_mag", self.alpha_mag),
            ("r_s0", self.r_s0),
            ("r_mag0", self.r_mag0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("thermal.{name} must be > 0, got {v}")));
            }
        }
        if !self.t0.is_finite() {
            return Err(Error::config("thermal.t0 must be finite"));
        }
        Ok(())
    }
}

pub fn stator_resistance_at(t_s: f64, c: &TempCoefficients) -> f64 {
    c.r_s0 * (1.0 + c.alpha_cu * (t_s - c.t0))
}

pub fn magnet_resistance_at(t_r: f64, c: &TempCoefficients) -> f64 {
    c.r_mag0 * (1.0 + c.alpha_mag * (t_r - c.t0))
}

/// `Re(V / I)` from two phasors. `None` when either is unsettled or the
/// current magnitude is below `current_floor`.
pub fn hf_resistance(v: &PhasorEstimate, i: &PhasorEstimate, current_floor: f64) -> Option<f64> {
    if !(v.settled && i.settled) || !(i.magnitude > current_floor) || i.magnitude == 0.0 {
        return None;
    }
    Some(v.magnitude / i.magnitude * (i.angle - v.angle).cos())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotorEstimate {
    pub t_r: f64,
    /// Outside `[t_min, t_max]`. The value is reported unclamped.
    pub out_of_range: bool,
}

/// Invert the linear stator + magnet model for the rotor temperature.
pub fn rotor_temperature(r_hf: f64, t_s: f64, c: &TempCoefficients) -> f64 {
    c.t0 + (r_hf - c.r_mag0 - stator_resistance_at(t_s, c)) / (c.alpha_mag * c.r_mag0)
}

/// [`rotor_temperature`] with a plausibility flag.
pub fn rotor_temperature_checked(r_hf: f64, t_s: f64, c: &TempCoefficients, range: (f64, f64)) -> RotorEstimate {
    let t_r = rotor_temperature(r_hf, t_s, c);
    RotorEstimate {
        t_r,
        out_of_range: !(t_r >= range.0 && t_r <= range.1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t_s: f64,
    pub t_r: f64,
    pub t_amb: f64,
}

impl ThermalState {
    pub fn ambient(t_amb: f64) -> Self {
        ThermalState {
            t_s: t_amb,
            t_r: t_amb,
            t_amb,
        }
    }
}

/// Two-node RC network: stator and rotor nodes, each tied to ambient, and a
/// rotor-stator path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalPlantParams {
    pub c_s: f64,
    pub c_r: f64,
    pub r_sa: f64,
    pub r_rs: f64,
    pub r_ra: f64,
    /// Capacitances are divided by this factor so transients fit short runs.
    pub compression: f64,
}

impl Default for ThermalPlantParams {
    fn default() -> Self {
        ThermalPlantParams {
            c_s: 1500.0,
            c_r: 600.0,
            r_sa: 0.9,
            r_rs: 0.6,
            r_ra: 4.0,
            compression: 60.0,
        }
    }
}

impl ThermalPlantParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_s", self.c_s),
            ("c_r", self.c_r),
            ("r_sa", self.r_sa),
            ("r_rs", self.r_rs),
            ("r_ra", self.r_ra),
            ("compression", self.compression),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("thermal.plant.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn effective_capacitances(&self) -> (f64, f64) {
        (self.c_s / self.compression, self.c_r / self.compression)
    }

    /// Steady-state node temperatures above ambient for constant losses.
    pub fn steady_state_rise(&self, p_cu: f64, p_mag: f64) -> (f64, f64) {
        let g = self.conductances();
        solve2(g, [p_cu, p_mag])
    }

    fn conductances(&self) -> [[f64; 2]; 2] {
        let (gsa, grs, gra) = (1.0 / self.r_sa, 1.0 / self.r_rs, 1.0 / self.r_ra);
        [[gsa + grs, -grs], [-grs, gra + grs]]
    }
}

/// Backward-Euler step of the plant. Losses in W, `dt` in s.
pub fn step_thermal(state: &ThermalState, p_cu: f64, p_mag: f64, plant: &ThermalPlantParams, dt: f64) -> ThermalState {
    debug_assert!(dt > 0.0 && p_cu >= 0.0 && p_mag >= 0.0);
    let (cs, cr) = plant.effective_capacitances();
    let g = plant.conductances();
    let xs = state.t_s - state.t_amb;
    let xr = state.t_r - state.t_amb;
    // (C/dt + G) x' = C/dt x + P
    let m = [[cs / dt + g[0][0], g[0][1]], [g[1][0], cr / dt + g[1][1]]];
    let rhs = [cs / dt * xs + p_cu, cr / dt * xr + p_mag];
    let (ys, yr) = solve2(m, rhs);
    ThermalState {
        t_s: state.t_amb + ys,
        t_r: state.t_amb + yr,
        t_amb: state.t_amb,
    }
}

fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> (f64, f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (
        (m[1][1] * b[0] - m[0][1] * b[1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    )
}

/// Magnet HF resistance at `t0` as a function of mechanical speed, linearly
/// interpolated between configured points and held beyond the ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RMag0Table {
    pub rpm: Vec<f64>,
    pub ohm: Vec<f64>,
}

impl Default for RMag0Table {
    fn default() -> Self {
        RMag0Table {
            rpm: vec![600.0, 900.0, 1200.0],
            ohm: vec![1.2, 1.6, 2.1],
        }
    }
}

impl RMag0Table {
    pub fn validate(&self) -> Result<()> {
        if self.rpm.is_empty() || self.rpm.len() != self.ohm.len() {
            return Err(Error::config("thermal.r_mag0: rpm and ohm lists must be non-empty and equal length"));
        }
        if self.rpm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("thermal.r_mag0.rpm must be strictly increasing"));
        }
        if self.ohm.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::config("thermal.r_mag0.ohm entries must be > 0"));
        }
        Ok(())
    }

    pub fn at(&self, rpm: f64) -> f64 {
        let n = self.rpm.len();
        if rpm <= self.rpm[0] {
            return self.ohm[0];
        }
        if rpm >= self.rpm[n - 1] {
            return self.ohm[n - 1];
        }
        let k = self.rpm.partition_point(|&x| x <= rpm) - 1;
        let f = (rpm - self.rpm[k]) / (self.rpm[k + 1] - self.rpm[k]);
        self.ohm[k] + f * (self.ohm[k + 1] - self.ohm[k])
    }
}
