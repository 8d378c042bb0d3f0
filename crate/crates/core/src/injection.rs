//! High-frequency injection references and scheduling.
//!
//! An `n`th-order balanced current offset of magnitude `M` corresponds, through
//! the salient inductance matrix, to a flux offset with an `n`th-order
//! positive-sequence part and an `(n-2)`th-order negative-sequence part. The
//! flux offset can be imposed on the flux loop directly (rotating-flux mode) or
//! converted into an equivalent torque offset of orders `n-1` and `n-3`
//! (torque mode).

use serde::{Deserialize, Serialize};

use crate::dtc::ControlReferences;
use crate::machine::{FrameVector, MachineParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionMode {
    RotatingFlux,
    Torque,
}

impl std::fmt::Display for InjectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InjectionMode::RotatingFlux => "rotating_flux",
            InjectionMode::Torque => "torque",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectionConfig {
    pub mode: InjectionMode,
    /// Injected current magnitude as a percentage of rated current.
    pub magnitude_pct: f64,
    pub harmonic_order: u32,
    /// Length of each injection window (s).
    pub on_s: f64,
    /// Window repetition period (s).
    pub period_s: f64,
    /// Accept magnitudes outside 2..5 % and even/low harmonic orders.
    pub allow_out_of_range: bool,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            mode: InjectionMode::RotatingFlux,
            magnitude_pct: 3.0,
            harmonic_order: 5,
            on_s: 15.0,
            period_s: 600.0,
            allow_out_of_range: false,
        }
    }
}

impl InjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude_pct.is_finite() && self.magnitude_pct >= 0.0) {
            return Err(Error::config("injection.magnitude_pct must be >= 0"));
        }
        if !(self.on_s.is_finite() && self.on_s >= 0.0 && self.period_s.is_finite() && self.period_s > 0.0) {
            return Err(Error::config("injection.on_s must be >= 0 and injection.period_s > 0"));
        }
        if self.on_s > self.period_s {
            return Err(Error::config("injection.on_s must not exceed injection.period_s"));
        }
        if self.harmonic_order < 2 {
            return Err(Error::config("injection.harmonic_order must be >= 2"));
        }
        if !self.allow_out_of_range {
            if !(2.0..=5.0).contains(&self.magnitude_pct) {
                return Err(Error::config(format!(
                    "injection.magnitude_pct = {} is outside 2..5 % of rated current \
                     (set injection.allow_out_of_range = true to override)",
                    self.magnitude_pct
                )));
            }
            if self.harmonic_order < 3 || self.harmonic_order.is_multiple_of(2) {
                return Err(Error::config(format!(
                    "injection.harmonic_order = {} must be odd and >= 3 \
                     (set injection.allow_out_of_range = true to override)",
                    self.harmonic_order
                )));
            }
        }
        Ok(())
    }

    /// Injected current magnitude `M` (A).
    pub fn magnitude(&self, params: &MachineParams) -> f64 {
        self.magnitude_pct / 100.0 * params.i_rated
    }
}

/// Balanced `n`th-order current offset `(M cos n theta, M sin n theta)`.
pub fn hf_current_reference(m: f64, n: u32, theta: f64) -> FrameVector {
    let (s, c) = (n as f64 * theta).sin_cos();
    FrameVector::stationary(m * c, m * s)
}

/// Flux offset produced by [`hf_current_reference`] through the salient
/// inductance matrix:
/// `(SL M cos n t + DL M cos (n-2) t, SL M sin n t - DL M sin (n-2) t)`.
pub fn hf_flux_reference(m: f64, n: u32, theta: f64, params: &MachineParams) -> FrameVector {
    let nf = n as f64;
    let (sn, cn) = (nf * theta).sin_cos();
    let (sn2, cn2) = ((nf - 2.0) * theta).sin_cos();
    let sl = params.sum_l() * m;
    let dl = params.delta_l() * m;
    FrameVector::stationary(sl * cn + dl * cn2, sl * sn - dl * sn2)
}

/// Torque offset that accompanies the flux offset at operating current `i`:
/// `(3/2)(poles/2) M [2 DL i_b cos (n-2) t + 2 DL i_a sin (n-2) t + lambda_pm sin (n-1) t]`.
///
/// Obtained by linearising the torque product around `(lambda, i)` with the
/// flux offset of [`hf_flux_reference`] (note its minus sign on the
/// `(n-2)`th-order beta term) and the current offset of
/// [`hf_current_reference`].
pub fn hf_torque_reference(m: f64, n: u32, theta: f64, i: FrameVector, params: &MachineParams) -> f64 {
    let nf = n as f64;
    let (s2, c2) = ((nf - 2.0) * theta).sin_cos();
    let s1 = ((nf - 1.0) * theta).sin();
    let dl2 = 2.0 * params.delta_l();
    params.torque_factor() * m * (dl2 * i.x2 * c2 + dl2 * i.x1 * s2 + params.lambda_pm * s1)
}

/// Per-axis HF resistances in the stationary frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfResistanceParams {
    pub r_s: f64,
    pub r_rhf_alpha: f64,
    pub r_rhf_beta: f64,
}

impl HfResistanceParams {
    pub fn r_alpha(&self) -> f64 {
        self.r_s + self.r_rhf_alpha
    }

    pub fn r_beta(&self) -> f64 {
        self.r_s + self.r_rhf_beta
    }

    /// The axis resistances of the reduced R-L relation are the totals.
    pub fn r_d(&self) -> f64 {
        self.r_alpha()
    }

    pub fn r_q(&self) -> f64 {
        self.r_beta()
    }
}

/// `n`th-order voltage response of the reduced R-L model:
/// `diag(R_d, R_q) di + w_n SL J di`, with `w_n = n w_r` and `J` the +90
/// degree rotation.
pub fn small_signal_voltage_oracle(
    di_n: FrameVector,
    omega_r: f64,
    n: u32,
    r_d: f64,
    r_q: f64,
    params: &MachineParams,
) -> FrameVector {
    let wl = n as f64 * omega_r * params.sum_l();
    FrameVector::stationary(r_d * di_n.x1 - wl * di_n.x2, r_q * di_n.x2 + wl * di_n.x1)
}

/// Full small-signal voltage under rotating-flux injection: the axis
/// resistances times `di` plus the time derivative of the flux offset at
/// constant speed, which has an `n`th-order and an `(n-2)`th-order part.
#[allow(clippy::too_many_arguments)]
pub fn full_small_signal_voltage(
    theta: f64,
    omega_r: f64,
    m: f64,
    n: u32,
    di: FrameVector,
    hf: &HfResistanceParams,
    params: &MachineParams,
) -> FrameVector {
    let nf = n as f64;
    let (sn, cn) = (nf * theta).sin_cos();
    let (sn2, cn2) = ((nf - 2.0) * theta).sin_cos();
    let sl = params.sum_l() * m;
    let dl = params.delta_l() * m;
    let nth = FrameVector::stationary(-nf * sl * sn * omega_r, nf * sl * cn * omega_r);
    let side = FrameVector::stationary(
        -(nf - 2.0) * dl * sn2 * omega_r,
        -(nf - 2.0) * dl * cn2 * omega_r,
    );
    FrameVector::stationary(hf.r_alpha() * di.x1, hf.r_beta() * di.x2) + nth + side
}

/// Window state at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStatus {
    pub active: bool,
    /// Index of the window containing `t` (or the last one started).
    pub index: u64,
    /// Time since the start of that window (s).
    pub phase_s: f64,
}

/// Injection is on during `[k period, k period + on)`.
pub fn injection_active(t: f64, config: &InjectionConfig) -> WindowStatus {
    debug_assert!(t >= 0.0);
    let k = (t / config.period_s).floor();
    let mut phase = t - k * config.period_s;
    let mut index = k as u64;
    // guard floating-point edge where t is a hair under a multiple of the period
    if phase >= config.period_s {
        phase -= config.period_s;
        index += 1;
    }
    WindowStatus {
        active: phase < config.on_s,
        index,
        phase_s: phase,
    }
}

/// HF terms for one control period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfTerms {
    pub current: FrameVector,
    pub flux: FrameVector,
    pub torque: f64,
}

impl HfTerms {
    pub fn evaluate(m: f64, n: u32, theta: f64, i: FrameVector, params: &MachineParams) -> Self {
        HfTerms {
            current: hf_current_reference(m, n, theta),
            flux: hf_flux_reference(m, n, theta, params),
            torque: hf_torque_reference(m, n, theta, i, params),
        }
    }
}

/// Superimpose the HF terms on the base references.
///
/// Rotating-flux mode shifts the flux reference vector by the flux offset (the
/// inner loop then regulates the base trajectory `lambda_hat - offset`) and
/// leaves the torque reference alone. Torque mode adds the torque offset and
/// leaves the flux loop untouched.
pub fn apply_injection(mode: InjectionMode, base: ControlReferences, hf: &HfTerms) -> ControlReferences {
    let mut out = base;
    match mode {
        InjectionMode::RotatingFlux => {
            out.flux_offset = base.flux_offset + hf.flux;
            out.current_offset = base.current_offset + hf.current;
        }
        InjectionMode::Torque => {
            out.torque = base.torque + hf.torque;
        }
    }
    out
}
