//! Conventional hysteresis direct torque control.
//!
//! Active voltage vector `k` (1..=6) points at `(k - 1) * 60` degrees and
//! sector `k` spans `+-30` degrees around it. The switching table is the
//! classic one: with flux demand `+1`, torque `+1` selects `k + 1` and torque
//! `-1` selects `k - 1`; with flux demand `-1` the choices are `k + 2` and
//! `k - 2`. Torque demand `0` applies a zero vector.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

use serde::{Deserialize, Serialize};

use crate::machine::{
    clarke, electromagnetic_torque, wrap_angle, Frame, FrameVector, MachineParams,
};
use crate::{Error, Result};

/// Inverter leg states; `true` connects the phase to the positive rail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SwitchState {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl SwitchState {
    pub const V0: SwitchState = SwitchState::new(false, false, false);
    pub const V7: SwitchState = SwitchState::new(true, true, true);

    pub const fn new(a: bool, b: bool, c: bool) -> Self {
        SwitchState { a, b, c }
    }

    /// Active vector `k` in 1..=6 (indices taken mod 6).
    pub fn active(k: i32) -> Self {
        const TABLE: [SwitchState; 6] = [
            SwitchState::new(true, false, false),
            SwitchState::new(true, true, false),
            SwitchState::new(false, true, false),
            SwitchState::new(false, true, true),
            SwitchState::new(false, false, true),
            SwitchState::new(true, false, true),
        ];
        TABLE[(k - 1).rem_euclid(6) as usize]
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::V0 || *self == Self::V7
    }

    /// All eight inverter states.
    pub fn all() -> [SwitchState; 8] {
        let mut out = [SwitchState::V0; 8];
        for (n, s) in out.iter_mut().enumerate() {
            *s = SwitchState::new(n & 4 != 0, n & 2 != 0, n & 1 != 0);
        }
        out
    }
}

/// Stationary-frame output voltage of an ideal two-level inverter.
pub fn inverter_voltage(sw: SwitchState, v_dc: f64) -> FrameVector {
    let (a, b, c) = (sw.a as u8 as f64, sw.b as u8 as f64, sw.c as u8 as f64);
    let k = 2.0 * v_dc / 3.0;
    clarke([
        k * (a - 0.5 * (b + c)),
        k * (b - 0.5 * (a + c)),
        k * (c - 0.5 * (a + b)),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtcConfig {
    /// Stator flux magnitude reference (Wb). Non-positive selects `lambda_pm`.
    pub lambda_ref: f64,
    /// Flux hysteresis half-band (Wb). Non-positive selects 2% of `lambda_ref`.
    pub flux_band: f64,
    /// Torque hysteresis half-band (N m). Non-positive selects 4% of rated torque.
    pub torque_band: f64,
    /// DC bus voltage (V). Non-positive selects `sqrt(2) * v_rated`.
    pub v_dc: f64,
    pub speed_kp: f64,
    pub speed_ki: f64,
    /// Torque command limit (N m). Non-positive selects twice rated torque.
    pub torque_limit: f64,
    /// Corner of the estimator's drift compensation (Hz).
    pub drift_corner_hz: f64,
    /// Bound on the estimator's drift state (Wb).
    pub drift_clamp: f64,
}

impl Default for DtcConfig {
    fn default() -> Self {
        DtcConfig {
            lambda_ref: 0.0,
            flux_band: 0.0,
            torque_band: 0.0,
            v_dc: 0.0,
            speed_kp: 0.15,
            speed_ki: 3.0,
            torque_limit: 0.0,
            drift_corner_hz: 1.0,
            drift_clamp: 1.0,
        }
    }
}

impl DtcConfig {
    /// Replace "auto" (non-positive) entries with machine-derived defaults.
    pub fn resolved(&self, params: &MachineParams) -> DtcConfig {
        let mut c = self.clone();
        if c.lambda_ref <= 0.0 {
            c.lambda_ref = params.lambda_pm;
        }
        if c.flux_band <= 0.0 {
            c.flux_band = 0.02 * c.lambda_ref;
        }
        if c.torque_band <= 0.0 {
            c.torque_band = 0.04 * params.rated_torque();
        }
        if c.v_dc <= 0.0 {
            c.v_dc = std::f64::consts::SQRT_2 * params.v_rated;
        }
        if c.torque_limit <= 0.0 {
            c.torque_limit = 2.0 * params.rated_torque();
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dtc.lambda_ref", self.lambda_ref),
            ("dtc.flux_band", self.flux_band),
            ("dtc.torque_band", self.torque_band),
            ("dtc.v_dc", self.v_dc),
            ("dtc.torque_limit", self.torque_limit),
            ("dtc.drift_corner_hz", self.drift_corner_hz),
            ("dtc.drift_clamp", self.drift_clamp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be > 0 (after defaults), got {v}")));
            }
        }
        if !(self.speed_kp.is_finite() && self.speed_kp >= 0.0 && self.speed_ki.is_finite() && self.speed_ki >= 0.0) {
            return Err(Error::config("dtc.speed_kp and dtc.speed_ki must be >= 0"));
        }
        Ok(())
    }
}

/// Voltage-model flux estimator with first-order drift compensation toward a
/// current-model anchor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxEstimatorState {
    pub lambda_hat: FrameVector,
    /// Deviation of the estimate from the anchor, as seen by the compensation.
    pub drift: FrameVector,
}

impl FluxEstimatorState {
    pub fn new(lambda0: FrameVector) -> Self {
        FluxEstimatorState {
            lambda_hat: lambda0,
            drift: FrameVector::zero(Frame::Stationary),
        }
    }
}

/// One estimator step:
/// `lambda_hat += (v - R_s i - w_c * drift) dt`, `drift = clamp(lambda_hat - anchor)`.
///
/// `anchor` is a low-frequency flux reference (the current model
/// `L(theta) i + psi_pm`). Below `corner_hz` the estimate follows the anchor;
/// above it, the integrated back-EMF. When the anchor is exact the estimate is
/// exact at every frequency.
#[allow(clippy::too_many_arguments)]
pub fn estimate_flux(
    state: &FluxEstimatorState,
    v: FrameVector,
    i: FrameVector,
    anchor: FrameVector,
    r_s: f64,
    dt: f64,
    corner_hz: f64,
    clamp: f64,
) -> FluxEstimatorState {
    let wc = std::f64::consts::TAU * corner_hz;
    let mut drift = state.lambda_hat - anchor;
    let m = drift.magnitude();
    if m > clamp {
        drift = drift * (clamp / m);
    }
    let lambda_hat = state.lambda_hat + (v - i * r_s - drift * wc) * dt;
    FluxEstimatorState { lambda_hat, drift }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxDemand {
    Raise,
    Lower,
}

impl FluxDemand {
    pub fn sign(self) -> i32 {
        match self {
            FluxDemand::Raise => 1,
            FluxDemand::Lower => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorqueDemand {
    Raise,
    Hold,
    Lower,
}

impl TorqueDemand {
    pub fn sign(self) -> i32 {
        match self {
            TorqueDemand::Raise => 1,
            TorqueDemand::Hold => 0,
            TorqueDemand::Lower => -1,
        }
    }
}

/// Two-level comparator with memory.
pub fn hysteresis_flux(err: f64, band: f64, prev: FluxDemand) -> FluxDemand {
    if err > band {
        FluxDemand::Raise
    } else if err < -band {
        FluxDemand::Lower
    } else {
        prev
    }
}

/// Three-level comparator. Leaves `Raise`/`Lower` for `Hold` when the error
/// crosses zero, and enters them outside the band.
pub fn hysteresis_torque(err: f64, band: f64, prev: TorqueDemand) -> TorqueDemand {
    if err > band {
        TorqueDemand::Raise
    } else if err < -band {
        TorqueDemand::Lower
    } else {
        match prev {
            TorqueDemand::Raise if err <= 0.0 => TorqueDemand::Hold,
            TorqueDemand::Lower if err >= 0.0 => TorqueDemand::Hold,
            p => p,
        }
    }
}

/// Sector (1..=6) of a stationary-frame angle.
pub fn sector_of(angle: f64) -> i32 {
    let a = wrap_angle(angle + FRAC_PI_6);
    ((a / FRAC_PI_3) as i32).min(5) + 1
}

/// Switching-table lookup.
///
/// For torque demand `Hold` the zero vector reachable from the most recent
/// active vector with a single leg change is returned, so consecutive zero
/// vectors alternate between `V0` and `V7` from sector to sector.
///
/// # Panics
/// If `sector` is outside 1..=6.
pub fn select_vector(sector: i32, flux: FluxDemand, torque: TorqueDemand) -> SwitchState {
    assert!((1..=6).contains(&sector), "invalid sector {sector}");
    let step = match (flux, torque) {
        (FluxDemand::Raise, TorqueDemand::Raise) => 1,
        (FluxDemand::Raise, TorqueDemand::Lower) => -1,
        (FluxDemand::Lower, TorqueDemand::Raise) => 2,
        (FluxDemand::Lower, TorqueDemand::Lower) => -2,
        (f, TorqueDemand::Hold) => {
            // neighbour that would have been applied with torque Raise
            let prev = SwitchState::active(sector + if f == FluxDemand::Raise { 1 } else { 2 });
            let ones = prev.a as u8 + prev.b as u8 + prev.c as u8;
            return if ones >= 2 { SwitchState::V7 } else { SwitchState::V0 };
        }
    };
    SwitchState::active(sector + step)
}

/// PI speed regulator with output clamp and conditional integration.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedRegulator {
    pub kp: f64,
    pub ki: f64,
    pub limit: f64,
    pub integral: f64,
}

impl SpeedRegulator {
    pub fn new(kp: f64, ki: f64, limit: f64) -> Self {
        SpeedRegulator {
            kp,
            ki,
            limit,
            integral: 0.0,
        }
    }

    /// Torque reference (N m) from mechanical speed reference and measurement.
    pub fn update(&mut self, omega_ref: f64, omega: f64, dt: f64) -> f64 {
        let err = omega_ref - omega;
        let candidate = self.integral + self.ki * err * dt;
        let unclamped = self.kp * err + candidate;
        if unclamped > self.limit {
            // integrate only if that moves the output back toward the range
            if err < 0.0 {
                self.integral = candidate;
            }
            self.limit
        } else if unclamped < -self.limit {
            if err > 0.0 {
                self.integral = candidate;
            }
            -self.limit
        } else {
            self.integral = candidate;
            unclamped
        }
    }
}

/// References handed to the inner DTC loop for one period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlReferences {
    /// Flux magnitude of the base (fundamental) trajectory (Wb).
    pub flux_magnitude: f64,
    /// Vector added to the base flux trajectory (Wb, stationary).
    pub flux_offset: FrameVector,
    /// Current that accompanies `flux_offset`; removed from the torque
    /// feedback so the torque loop regulates the base trajectory only.
    pub current_offset: FrameVector,
    pub torque: f64,
}

impl ControlReferences {
    pub fn new(flux_magnitude: f64, torque: f64) -> Self {
        ControlReferences {
            flux_magnitude,
            flux_offset: FrameVector::zero(Frame::Stationary),
            current_offset: FrameVector::zero(Frame::Stationary),
            torque,
        }
    }
}

/// Inner DTC loop: estimator, comparators and switching table.
#[derive(Clone, Debug)]
pub struct DtcController {
    pub config: DtcConfig,
    pub estimator: FluxEstimatorState,
    flux_demand: FluxDemand,
    torque_demand: TorqueDemand,
    /// Last estimated torque (N m).
    pub torque_hat: f64,
}

impl DtcController {
    pub fn new(config: DtcConfig, lambda0: FrameVector) -> Self {
        DtcController {
            config,
            estimator: FluxEstimatorState::new(lambda0),
            flux_demand: FluxDemand::Raise,
            torque_demand: TorqueDemand::Hold,
            torque_hat: 0.0,
        }
    }

    pub fn flux_hat(&self) -> FrameVector {
        self.estimator.lambda_hat
    }

    /// Update the flux estimate with the voltage applied over the last period
    /// and the mean current over that period.
    pub fn observe(&mut self, v: FrameVector, i_mean: FrameVector, anchor: FrameVector, r_s: f64, dt: f64) {
        self.estimator = estimate_flux(
            &self.estimator,
            v,
            i_mean,
            anchor,
            r_s,
            dt,
            self.config.drift_corner_hz,
            self.config.drift_clamp,
        );
    }

    /// Pick the inverter state for the next period.
    pub fn switch(&mut self, refs: &ControlReferences, i: FrameVector, poles: u32) -> SwitchState {
        let base_flux = self.estimator.lambda_hat - refs.flux_offset;
        let base_current = i - refs.current_offset;
        self.torque_hat = electromagnetic_torque(base_flux, base_current, poles);
        self.flux_demand = hysteresis_flux(
            refs.flux_magnitude - base_flux.magnitude(),
            self.config.flux_band,
            self.flux_demand,
        );
        self.torque_demand = hysteresis_torque(
            refs.torque - self.torque_hat,
            self.config.torque_band,
            self.torque_demand,
        );
        select_vector(sector_of(base_flux.angle()), self.flux_demand, self.torque_demand)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn zero_vectors_give_zero_voltage() {
        for sw in [SwitchState::V0, SwitchState::V7] {
            let v = inverter_voltage(sw, 300.0);
            assert!(v.magnitude() < 1e-12);
        }
    }

    #[test]
    fn v1_points_along_alpha() {
        let v = inverter_voltage(SwitchState::active(1), 300.0);
        assert!((v.x1 - 200.0).abs() < 1e-12 && v.x2.abs() < 1e-12);
    }

    #[test]
    fn active_vectors_are_60_degrees_apart() {
        for k in 1..=6 {
            let v = inverter_voltage(SwitchState::active(k), 3.0);
            assert!((v.magnitude() - 2.0).abs() < 1e-12);
            let expected = wrap_angle((k - 1) as f64 * FRAC_PI_3);
            let d = wrap_angle(v.angle()) - expected;
            // equal modulo a full turn
            assert!(d.abs() < 1e-12 || (d.abs() - TAU).abs() < 1e-12);
            assert_eq!(sector_of(v.angle()), k);
        }
    }

    #[test]
    fn eight_distinct_states() {
        let all = SwitchState::all();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert_eq!(all.iter().filter(|s| s.is_zero()).count(), 2);
    }

    #[test]
    fn flux_comparator() {
        let band = 0.01;
        assert_eq!(hysteresis_flux(0.02, band, FluxDemand::Lower), FluxDemand::Raise);
        assert_eq!(hysteresis_flux(-0.02, band, FluxDemand::Raise), FluxDemand::Lower);
        assert_eq!(hysteresis_flux(0.005, band, FluxDemand::Lower), FluxDemand::Lower);
        assert_eq!(hysteresis_flux(-0.005, band, FluxDemand::Raise), FluxDemand::Raise);
    }

    #[test]
    fn torque_comparator() {
        let band = 0.1;
        assert_eq!(hysteresis_torque(0.2, band, TorqueDemand::Hold), TorqueDemand::Raise);
        assert_eq!(hysteresis_torque(-0.2, band, TorqueDemand::Hold), TorqueDemand::Lower);
        assert_eq!(hysteresis_torque(0.05, band, TorqueDemand::Raise), TorqueDemand::Raise);
        assert_eq!(hysteresis_torque(0.0, band, TorqueDemand::Raise), TorqueDemand::Hold);
        assert_eq!(hysteresis_torque(0.0, band, TorqueDemand::Lower), TorqueDemand::Hold);
        assert_eq!(hysteresis_torque(0.05, band, TorqueDemand::Hold), TorqueDemand::Hold);
    }

    #[test]
    fn table_examples() {
        assert_eq!(
            select_vector(1, FluxDemand::Raise, TorqueDemand::Raise),
            SwitchState::new(true, true, false)
        );
        assert_eq!(
            select_vector(1, FluxDemand::Lower, TorqueDemand::Raise),
            SwitchState::new(false, true, false)
        );
        for s in 1..=6 {
            for f in [FluxDemand::Raise, FluxDemand::Lower] {
                assert!(select_vector(s, f, TorqueDemand::Hold).is_zero());
            }
        }
        assert_eq!(select_vector(6, FluxDemand::Raise, TorqueDemand::Raise), SwitchState::active(1));
        assert_eq!(select_vector(1, FluxDemand::Lower, TorqueDemand::Lower), SwitchState::active(5));
    }

    #[test]
    fn zero_vector_is_one_switch_away() {
        for s in 1..=6 {
            for f in [FluxDemand::Raise, FluxDemand::Lower] {
                let active = select_vector(s, f, TorqueDemand::Raise);
                let zero = select_vector(s, f, TorqueDemand::Hold);
                let changes = (active.a != zero.a) as u8 + (active.b != zero.b) as u8 + (active.c != zero.c) as u8;
                assert_eq!(changes, 1);
            }
        }
    }

    #[test]
    #[should_panic(expected = "invalid sector")]
    fn bad_sector_panics() {
        select_vector(7, FluxDemand::Raise, TorqueDemand::Raise);
    }

    #[test]
    fn regulator_examples() {
        let mut r = SpeedRegulator::new(0.5, 0.0, 10.0);
        assert_eq!(r.update(3.0, 3.0, 1e-3), 0.0);
        assert!((r.update(4.0, 2.0, 1e-3) - 1.0).abs() < 1e-15);

        let mut r = SpeedRegulator::new(1.0, 100.0, 2.0);
        for _ in 0..1000 {
            assert_eq!(r.update(100.0, 0.0, 1e-3), 2.0);
        }
        // integrator frozen while saturated
        assert_eq!(r.integral, 0.0);
    }

    #[test]
    fn estimator_resistive_input_decays_toward_anchor() {
        let anchor = FrameVector::stationary(0.4, 0.0);
        let mut s = FluxEstimatorState::new(FrameVector::stationary(0.5, 0.1));
        let i = FrameVector::stationary(1.0, 2.0);
        let d0 = (s.lambda_hat - anchor).magnitude();
        for _ in 0..20000 {
            s = estimate_flux(&s, i * 2.0, i, anchor, 2.0, 5e-5, 1.0, 1.0);
        }
        let d1 = (s.lambda_hat - anchor).magnitude();
        assert!(d1 < 0.01 * d0, "{d0} -> {d1}");
    }

    #[test]
    fn estimator_bounded_under_dc_offset() {
        let anchor = FrameVector::stationary(0.4, 0.0);
        let mut s = FluxEstimatorState::new(anchor);
        let zero = FrameVector::zero(Frame::Stationary);
        for _ in 0..400_000 {
            s = estimate_flux(&s, FrameVector::stationary(1.0, -0.5), zero, anchor, 2.0, 5e-5, 1.0, 1.0);
            assert!(s.lambda_hat.magnitude() < 1.0);
        }
        // settles at offset / w_c
        let expected = 1.0 / std::f64::consts::TAU;
        assert!(((s.lambda_hat - anchor).x1 - expected).abs() < 1e-3);
    }
}
