use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rated shaft power of the reference machine (1 hp), used only to fit the
/// default magnet flux linkage.
const RATED_POWER_W: f64 = 745.7;

/// Electrical and mechanical constants of the IPM machine.
///
/// Defaults are the 1 hp, 4-pole test machine. `lambda_pm` is not listed for
/// that machine; the default is fitted so that rated torque
/// (`RATED_POWER_W / omega_rated`) is produced at rated current with `i_d = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineParams {
    /// Stator resistance (ohm) at the reference temperature.
    pub r_s: f64,
    /// d-axis inductance (H).
    pub l_d: f64,
    /// q-axis inductance (H).
    pub l_q: f64,
    /// Magnet flux linkage (Wb).
    pub lambda_pm: f64,
    pub poles: u32,
    /// Rotor + load inertia (kg m^2).
    pub inertia: f64,
    /// Rated line voltage (V rms).
    pub v_rated: f64,
    /// Rated phase current, peak (A).
    pub i_rated: f64,
    /// Rated mechanical speed (rad/s).
    pub omega_rated: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        let omega_rated = 1800.0 * std::f64::consts::TAU / 60.0;
        let i_rated = 2.86;
        let poles = 4;
        let lambda_pm =
            RATED_POWER_W / omega_rated / (1.5 * (poles as f64 / 2.0) * i_rated);
        MachineParams {
            r_s: 2.85,
            l_d: 14.41e-3,
            l_q: 27.92e-3,
            lambda_pm,
            poles,
            inertia: 0.0050,
            v_rated: 230.0,
            i_rated,
            omega_rated,
        }
    }
}

impl MachineParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("machine.r_s", self.r_s),
            ("machine.l_d", self.l_d),
            ("machine.l_q", self.l_q),
            ("machine.inertia", self.inertia),
            ("machine.i_rated", self.i_rated),
            ("machine.omega_rated", self.omega_rated),
            ("machine.v_rated", self.v_rated),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.lambda_pm.is_finite() && self.lambda_pm >= 0.0) {
            return Err(Error::config(format!(
                "machine.lambda_pm must be finite and >= 0, got {}",
                self.lambda_pm
            )));
        }
        if self.poles < 2 || !self.poles.is_multiple_of(2) {
            return Err(Error::config(format!(
                "machine.poles must be even and >= 2, got {}",
                self.poles
            )));
        }
        Ok(())
    }

    /// Average inductance `(L_d + L_q) / 2`.
    pub fn sum_l(&self) -> f64 {
        0.5 * (self.l_d + self.l_q)
    }

    /// Saliency half-difference `(L_d - L_q) / 2`; negative for an IPM machine.
    pub fn delta_l(&self) -> f64 {
        0.5 * (self.l_d - self.l_q)
    }

    pub fn pole_pairs(&self) -> f64 {
        self.poles as f64 / 2.0
    }

    /// `(3/2)(poles/2)`, the torque constant multiplying the flux x current product.
    pub fn torque_factor(&self) -> f64 {
        1.5 * self.pole_pairs()
    }

    /// Torque at rated current on the q axis (N m).
    pub fn rated_torque(&self) -> f64 {
        self.torque_factor() * self.lambda_pm * self.i_rated
    }

    pub fn rpm_to_electrical(&self, rpm: f64) -> f64 {
        rpm * std::f64::consts::TAU / 60.0 * self.pole_pairs()
    }

    pub fn electrical_to_rpm(&self, omega_e: f64) -> f64 {
        omega_e / self.pole_pairs() * 60.0 / std::f64::consts::TAU
    }
}

/// High-frequency equivalent circuit of the machine at steady state: stator
/// resistance and leakage, magnetising branch, and a magnet branch whose
/// resistance is scaled by the equivalent slip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagnetHfModel {
    /// Stator-reflected magnet HF resistance at the reference temperature (ohm).
    pub r_mag0: f64,
    pub l_lmag: f64,
    pub l_ls: f64,
    pub l_m: f64,
    /// Rotor-frame corner below which magnet eddy currents are not induced (Hz).
    /// Fundamental currents are DC in the rotor frame and see no magnet branch.
    pub eddy_corner_hz: f64,
}

impl Default for MagnetHfModel {
    fn default() -> Self {
        MagnetHfModel {
            r_mag0: 1.2,
            l_lmag: 2.0e-3,
            l_ls: 2.0e-3,
            l_m: 19.0e-3,
            eddy_corner_hz: 0.5,
        }
    }
}

impl MagnetHfModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_mag0.is_finite() && self.r_mag0 > 0.0) {
            return Err(Error::config("magnet.r_mag0 must be > 0"));
        }
        for (name, v) in [
            ("magnet.l_lmag", self.l_lmag),
            ("magnet.l_ls", self.l_ls),
            ("magnet.l_m", self.l_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be >= 0")));
            }
        }
        if !(self.eddy_corner_hz.is_finite() && self.eddy_corner_hz > 0.0) {
            return Err(Error::config("magnet.eddy_corner_hz must be > 0"));
        }
        Ok(())
    }

    /// Per-phase input impedance of the equivalent circuit at angular
    /// frequency `omega` and slip `slip`, with stator resistance `r_s`.
    ///
    /// At zero slip the magnet branch is open and only `r_s + j omega (L_ls + L_m)`
    /// remains.
    pub fn circuit_impedance(&self, r_s: f64, omega: f64, slip: f64) -> Complex64 {
        let zs = Complex64::new(r_s, omega * self.l_ls);
        let zm = Complex64::new(0.0, omega * self.l_m);
        if slip <= 0.0 {
            return zs + zm;
        }
        let zb = Complex64::new(self.r_mag0 / slip, omega * self.l_lmag);
        zs + zm * zb / (zm + zb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = MachineParams::default();
        p.validate().unwrap();
        MagnetHfModel::default().validate().unwrap();
        assert!((p.sum_l() - 21.165e-3).abs() < 1e-12);
        assert!((p.delta_l() + 6.755e-3).abs() < 1e-12);
        assert!((p.sum_l() + p.delta_l() - p.l_d).abs() < 1e-15);
    }

    #[test]
    fn lambda_pm_fit_gives_rated_torque() {
        let p = MachineParams::default();
        assert!((p.rated_torque() - RATED_POWER_W / p.omega_rated).abs() < 1e-9);
    }

    #[test]
    fn rejects_odd_poles() {
        let p = MachineParams {
            poles: 3,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = MachineParams {
            l_q: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn circuit_zero_slip_has_no_magnet_branch() {
        let m = MagnetHfModel::default();
        let z = m.circuit_impedance(2.85, 100.0, 0.0);
        assert_eq!(z.re, 2.85);
        assert!((z.im - 100.0 * (m.l_ls + m.l_m)).abs() < 1e-12);
        // at nonzero slip the magnet branch adds positive resistance
        assert!(m.circuit_impedance(2.85, 100.0, 0.8).re > 2.85);
    }
}
