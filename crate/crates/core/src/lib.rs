//! Rotor magnet temperature monitoring for direct-torque-controlled interior
//! permanent-magnet machines.
//!
//! A high-frequency rotating-flux or torque offset is superimposed on a
//! hysteresis DTC loop. The injected-harmonic voltage and current phasors are
//! extracted with a sliding single-bin DFT, turned into a high-frequency
//! resistance, and inverted into a magnet temperature. Everything runs
//! against a simulated machine and a two-node thermal plant that provides the
//! ground truth.
//!
//! Module map:
//! - [`machine`]: IPMSM electrical/mechanical model, frame transforms, eddy-loss physics
//! - [`dtc`]: two-level inverter, flux estimator, hysteresis comparators, switching table
//! - [`injection`]: HF current/flux/torque references and the injection schedule
//! - [`dsp`]: bandpass pre-filters, circular-array phasor extractor, smoothing
//! - [`thermal`]: resistance extraction, temperature inversion, thermal plant
//! - [`harness`]: scenario configuration, the simulation loop, CSV/summary output

// `!(x > 0.0)` style checks are used to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod dtc;
mod error;
pub mod harness;
pub mod injection;
pub mod machine;
pub mod selftest;
pub mod thermal;

pub use error::{Error, Result};

/// Inverter switching / control rate (Hz).
pub const CONTROL_RATE_HZ: f64 = 20_000.0;

/// One control period (s).
pub const CONTROL_PERIOD: f64 = 1.0 / CONTROL_RATE_HZ;
