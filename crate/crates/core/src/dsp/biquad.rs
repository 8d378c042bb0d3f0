use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::{Error, Result};

/// Normalised biquad coefficients (`a0 = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    /// Second-order Butterworth lowpass via the prewarped bilinear transform.
    pub fn butterworth_lowpass(corner_hz: f64, fs: f64) -> Result<Self> {
        if !(corner_hz > 0.0 && corner_hz < 0.5 * fs) {
            return Err(Error::config(format!(
                "lowpass corner {corner_hz} Hz must lie in (0, fs/2) for fs = {fs} Hz"
            )));
        }
        let k = (PI * corner_hz / fs).tan();
        let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
        let b0 = k * k * norm;
        Ok(BiquadCoeffs {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - SQRT_2 * k + k * k) * norm,
        })
    }

    /// Complex frequency response at `f` Hz.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::cis(-2.0 * PI * f / fs);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Both poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// Direct-form-II-transposed biquad section.
#[derive(Clone, Debug, PartialEq)]
pub struct Biquad {
    c: BiquadCoeffs,
    s1: f64,
    s2: f64,
}

impl Biquad {
    pub fn new(c: BiquadCoeffs) -> Result<Self> {
        if !c.is_stable() {
            return Err(Error::config(format!("biquad poles not inside the unit circle: {c:?}")));
        }
        Ok(Biquad { c, s1: 0.0, s2: 0.0 })
    }

    pub fn coeffs(&self) -> &BiquadCoeffs {
        &self.c
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let c = &self.c;
        let y = c.b0 * x + self.s1;
        self.s1 = c.b1 * x - c.a1 * y + self.s2;
        self.s2 = c.b2 * x - c.a2 * y;
        y
    }

    /// Load the delay registers with the steady state for a constant input `x0`.
    pub fn prime(&mut self, x0: f64) {
        let c = &self.c;
        let y = x0 * (c.b0 + c.b1 + c.b2) / (1.0 + c.a1 + c.a2);
        self.s2 = c.b2 * x0 - c.a2 * y;
        self.s1 = y - c.b0 * x0;
    }

    pub fn reset(&mut self) {
        self.s1 = 0.0;
        self.s2 = 0.0;
    }
}

/// Butterworth bandpass from a second-order lowpass prototype: two biquad
/// sections, unity gain at the centre, bandwidth `f0 / q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButterworthBandpass {
    sections: [Biquad; 2],
    center_hz: f64,
}

impl ButterworthBandpass {
    pub fn design(center_hz: f64, q: f64, fs: f64) -> Result<Self> {
        if !(center_hz > 0.0 && center_hz < 0.5 * fs) || !(q > 0.5) {
            return Err(Error::config(format!(
                "bandpass centre {center_hz} Hz / Q {q} invalid for fs = {fs} Hz"
            )));
        }
        let k = 2.0 * fs;
        let w0 = k * (PI * center_hz / fs).tan();
        let bw = w0 / q;
        // prototype pole in the upper half plane; its conjugate yields the
        // conjugate band-pass poles
        let pb = Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2) * bw;
        let root = (pb * pb - 4.0 * w0 * w0).sqrt();
        let analog = [0.5 * (pb + root), 0.5 * (pb - root)];
        let mut sections = Vec::with_capacity(2);
        for s in analog {
            let z = (k + s) / (k - s);
            let mut c = BiquadCoeffs {
                b0: 1.0,
                b1: 0.0,
                b2: -1.0,
                a1: -2.0 * z.re,
                a2: z.norm_sqr(),
            };
            let g = c.response(center_hz, fs).norm();
            debug_assert!(g > 0.0);
            c.b0 /= g;
            c.b2 /= g;
            sections.push(Biquad::new(c)?);
        }
        let sections: [Biquad; 2] = sections.try_into().expect("two sections");
        Ok(ButterworthBandpass { sections, center_hz })
    }

    pub fn center_hz(&self) -> f64 {
        self.center_hz
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.sections[0].step(x);
        self.sections[1].step(y)
    }

    /// Complex response of the cascade at `f` Hz.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        self.sections[0].coeffs().response(f, fs) * self.sections[1].coeffs().response(f, fs)
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.reset();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 20_000.0;

    /// Steady-state gain measured by simulation, independent of `response`.
    fn measured_gain(filter: &mut ButterworthBandpass, f: f64) -> f64 {
        let n = (FS * 4.0) as usize;
        let mut peak: f64 = 0.0;
        for k in 0..n {
            let x = (2.0 * PI * f * k as f64 / FS).sin();
            let y = filter.step(x);
            if k > n / 2 {
                peak = peak.max(y.abs());
            }
        }
        peak
    }

    #[test]
    fn zero_in_zero_out() {
        let mut bp = ButterworthBandpass::design(100.0, 5.0, FS).unwrap();
        for _ in 0..1000 {
            assert_eq!(bp.step(0.0), 0.0);
        }
    }

    #[test]
    fn unity_at_center() {
        for f0 in [50.0, 100.0, 150.0, 200.0] {
            let bp = ButterworthBandpass::design(f0, 5.0, FS).unwrap();
            let h = bp.response(f0, FS);
            assert!((h.norm() - 1.0).abs() < 1e-9);
            assert!(h.im.abs() < 1e-6, "zero phase at centre");
            let mut run = bp.clone();
            let g = measured_gain(&mut run, f0);
            assert!((g - 1.0).abs() < 0.01, "{f0}: {g}");
        }
    }

    #[test]
    fn attenuates_half_center() {
        let mut bp = ButterworthBandpass::design(100.0, 5.0, FS).unwrap();
        let g = measured_gain(&mut bp, 50.0);
        assert!(20.0 * g.log10() <= -20.0, "{g}");
    }

    #[test]
    fn lowpass_dc_gain_and_stability() {
        let c = BiquadCoeffs::butterworth_lowpass(0.5, FS).unwrap();
        assert!(c.is_stable());
        let h = c.response(0.0, FS);
        // 1 + a1 + a2 is ~1e-8 here, so the direct form loses digits
        assert!((h.re - 1.0).abs() < 1e-6 && h.im.abs() < 1e-12);
        assert!((c.response(0.5, FS).norm() - FRAC_1_SQRT_2).abs() < 1e-6);
        assert!(BiquadCoeffs::butterworth_lowpass(0.0, FS).is_err());
    }

    #[test]
    fn unstable_coefficients_rejected() {
        let c = BiquadCoeffs {
            b0: 1.0,
            b1: 0.0,
            b2: 0.0,
            a1: 0.0,
            a2: 1.2,
        };
        assert!(Biquad::new(c).is_err());
    }

    #[test]
    fn primed_filter_holds_constant() {
        let mut f = Biquad::new(BiquadCoeffs::butterworth_lowpass(50.0, FS).unwrap()).unwrap();
        f.prime(3.25);
        for _ in 0..10_000 {
            assert!((f.step(3.25) - 3.25).abs() < 1e-9);
        }
    }
}
