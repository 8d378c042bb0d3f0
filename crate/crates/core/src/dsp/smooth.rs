use std::f64::consts::TAU;

use std::f64::consts::{PI, SQRT_2};

use super::phasor::PhasorEstimate;
use crate::machine::wrap_pm_pi;
use crate::{Error, Result};

/// Second-order Butterworth lowpass in trapezoidal state-variable form.
///
/// Same transfer function as the bilinear-transformed biquad, but the state
/// stays well conditioned when the corner is many decades below the sample
/// rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Lowpass2 {
    a1: f64,
    a2: f64,
    a3: f64,
    ic1: f64,
    ic2: f64,
}

impl Lowpass2 {
    pub fn new(corner_hz: f64, fs: f64) -> Result<Self> {
        if !(corner_hz > 0.0 && corner_hz < 0.5 * fs) {
            return Err(Error::config(format!(
                "lowpass corner {corner_hz} Hz must lie in (0, fs/2) for fs = {fs} Hz"
            )));
        }
        let g = (PI * corner_hz / fs).tan();
        let a1 = 1.0 / (1.0 + g * (g + SQRT_2));
        let a2 = g * a1;
        Ok(Lowpass2 {
            a1,
            a2,
            a3: g * a2,
            ic1: 0.0,
            ic2: 0.0,
        })
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let v3 = x - self.ic2;
        let v1 = self.a1 * self.ic1 + self.a2 * v3;
        let v2 = self.ic2 + self.a2 * self.ic1 + self.a3 * v3;
        self.ic1 = 2.0 * v1 - self.ic1;
        self.ic2 = 2.0 * v2 - self.ic2;
        v2
    }

    /// Steady state for a constant input `x0`.
    pub fn prime(&mut self, x0: f64) {
        self.ic1 = 0.0;
        self.ic2 = x0;
    }

    pub fn reset(&mut self) {
        self.ic1 = 0.0;
        self.ic2 = 0.0;
    }
}

/// Second-order lowpass on magnitude and unwrapped angle. Unsettled inputs
/// pass through untouched; the filters are primed with the first settled one.
#[derive(Clone, Debug)]
pub struct PhasorSmoother {
    magnitude: Lowpass2,
    angle: Lowpass2,
    last_raw_angle: f64,
    turns: f64,
    primed: bool,
}

impl PhasorSmoother {
    pub fn new(corner_hz: f64, fs: f64) -> Result<Self> {
        Ok(PhasorSmoother {
            magnitude: Lowpass2::new(corner_hz, fs)?,
            angle: Lowpass2::new(corner_hz, fs)?,
            last_raw_angle: 0.0,
            turns: 0.0,
            primed: false,
        })
    }

    pub fn smooth(&mut self, raw: PhasorEstimate) -> PhasorEstimate {
        if !raw.settled {
            return raw;
        }
        if !self.primed {
            self.primed = true;
            self.last_raw_angle = raw.angle;
            self.turns = 0.0;
            self.magnitude.prime(raw.magnitude);
            self.angle.prime(raw.angle);
        }
        let jump = raw.angle - self.last_raw_angle;
        if jump > 0.5 * TAU {
            self.turns -= 1.0;
        } else if jump < -0.5 * TAU {
            self.turns += 1.0;
        }
        self.last_raw_angle = raw.angle;
        let m = self.magnitude.step(raw.magnitude);
        let a = self.angle.step(raw.angle + self.turns * TAU);
        PhasorEstimate {
            magnitude: m,
            angle: wrap_pm_pi(a),
            settled: true,
        }
    }

    pub fn reset(&mut self) {
        self.magnitude.reset();
        self.angle.reset();
        self.primed = false;
        self.turns = 0.0;
        self.last_raw_angle = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{Biquad, BiquadCoeffs};

    fn est(m: f64, a: f64) -> PhasorEstimate {
        PhasorEstimate {
            magnitude: m,
            angle: a,
            settled: true,
        }
    }

    #[test]
    fn matches_direct_form_response() {
        // compare against the biquad design at a corner where the direct form
        // is still well conditioned
        let fs = 20_000.0;
        let c = BiquadCoeffs::butterworth_lowpass(200.0, fs).unwrap();
        let mut bq = Biquad::new(c).unwrap();
        let mut lp = Lowpass2::new(200.0, fs).unwrap();
        for k in 0..5000 {
            let x = (0.013 * k as f64).sin() + if k % 97 == 0 { 1.0 } else { 0.0 };
            assert!((bq.step(x) - lp.step(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn primed_low_corner_holds_constant() {
        let mut lp = Lowpass2::new(0.5, 20_000.0).unwrap();
        lp.prime(3.25);
        for _ in 0..1_000_000 {
            assert!((lp.step(3.25) - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn step_response_settles() {
        let fs = 20_000.0;
        let mut lp = Lowpass2::new(0.5, fs).unwrap();
        let mut y = 0.0;
        // five time constants of a 0.5 Hz corner
        for _ in 0..(5.0 / (std::f64::consts::TAU * 0.5) * fs) as usize {
            y = lp.step(1.0);
        }
        assert!((y - 1.0).abs() < 0.05, "{y}");
    }

    #[test]
    fn constant_input_passes() {
        let mut s = PhasorSmoother::new(0.5, 20_000.0).unwrap();
        for _ in 0..1000 {
            let o = s.smooth(est(2.0, 1.0));
            assert!((o.magnitude - 2.0).abs() < 1e-9);
            assert!((o.angle - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn angle_near_pi_does_not_average_to_zero() {
        let mut s = PhasorSmoother::new(0.5, 20_000.0).unwrap();
        let mut out = est(0.0, 0.0);
        for k in 0..40_000 {
            let a = if k % 2 == 0 { PI - 0.01 } else { -PI + 0.01 };
            out = s.smooth(est(1.0, a));
        }
        assert!(out.angle.abs() > PI - 0.02, "{}", out.angle);
    }

    #[test]
    fn unsettled_passthrough() {
        let mut s = PhasorSmoother::new(0.5, 20_000.0).unwrap();
        let raw = PhasorEstimate {
            magnitude: 5.0,
            angle: 0.3,
            settled: false,
        };
        assert_eq!(s.smooth(raw), raw);
    }
}
