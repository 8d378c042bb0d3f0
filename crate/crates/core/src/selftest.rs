//! Fast invariant checks run by the `selftest` subcommand.

use std::f64::consts::{PI, TAU};

use crate::dsp::{ButterworthBandpass, DspConfig, HfPhasorPipeline, PhasorExtractor};
use crate::injection::{hf_current_reference, hf_flux_reference, small_signal_voltage_oracle};
use crate::machine::{clarke, inductance_matrix, inverse_park, park, skin_depth, FrameVector, MachineParams, MU_0};
use crate::thermal::{hf_resistance, magnet_resistance_at, rotor_temperature, stator_resistance_at, TempCoefficients};
use crate::CONTROL_PERIOD;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (limit {tol:.1e})"),
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        park_round_trip(),
        clarke_of_current_offsets(),
        flux_offset_identity(),
        phasor_oracle(),
        bandpass_gain(),
        rl_identity(),
        temperature_round_trip(),
        skin_depth_values(),
    ]
}

fn park_round_trip() -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..360 {
        let th = k as f64 * PI / 180.0;
        let v = FrameVector::stationary(0.3 * k as f64 - 7.0, 1.1);
        let back = inverse_park(th, park(th, v));
        worst = worst.max((back - v).magnitude());
        worst = worst.max((park(th, v).magnitude() - v.magnitude()).abs());
    }
    check("park orthogonality", worst, 1e-12)
}

fn clarke_of_current_offsets() -> Check {
    let (m, n) = (0.1, 5u32);
    let mut worst: f64 = 0.0;
    for k in 0..720 {
        let th = k as f64 * PI / 360.0;
        let nth = n as f64 * th;
        let abc = [
            m * nth.cos(),
            m * (nth - 2.0 * PI / 3.0).cos(),
            m * (nth + 2.0 * PI / 3.0).cos(),
        ];
        worst = worst.max((clarke(abc) - hf_current_reference(m, n, th)).magnitude());
    }
    check("clarke of phase offsets", worst, 1e-12)
}

fn flux_offset_identity() -> Check {
    let p = MachineParams::default();
    let mut worst: f64 = 0.0;
    for k in 0..720 {
        let th = k as f64 * PI / 360.0;
        let di = hf_current_reference(0.1, 5, th);
        let l = inductance_matrix(th, &p);
        let dl = FrameVector::stationary(l[0][0] * di.x1 + l[0][1] * di.x2, l[1][0] * di.x1 + l[1][1] * di.x2);
        worst = worst.max((dl - hf_flux_reference(0.1, 5, th, &p)).magnitude());
    }
    check("flux offset = L(theta) current offset", worst, 1e-12)
}

fn phasor_oracle() -> Check {
    let w0 = TAU * 250.0;
    let mut ex = PhasorExtractor::new(w0, CONTROL_PERIOD).expect("integer window");
    let (c, phi) = (2.5, -1.2);
    let mut e = ex.estimate();
    for k in 0..1000u64 {
        let ph = TAU * (k % 80) as f64 / 80.0 + phi;
        e = ex.update(c * ph.cos());
    }
    let worst = ((e.magnitude - c) / c).abs().max((e.angle - phi).abs());
    check("phasor extractor on exact sinusoid", worst, 1e-10)
}

fn bandpass_gain() -> Check {
    let fs = 1.0 / CONTROL_PERIOD;
    let bp = ButterworthBandpass::design(100.0, 5.0, fs).expect("design");
    let center_err = (bp.response(100.0, fs).norm() - 1.0).abs();
    let half = bp.response(50.0, fs).norm();
    Check {
        name: "bandpass centre gain and half-frequency rejection",
        passed: center_err < 0.01 && 20.0 * half.log10() <= -20.0,
        detail: format!("centre error {center_err:.2e}, 0.5x gain {:.1} dB", 20.0 * half.log10()),
    }
}

fn rl_identity() -> Check {
    let p = MachineParams::default();
    let (r, omega_r, n) = (3.0, p.rpm_to_electrical(600.0), 5u32);
    let w = n as f64 * omega_r;
    let mut pipe = HfPhasorPipeline::new(w, CONTROL_PERIOD, &DspConfig::default()).expect("pipeline");
    let mut est = None;
    for k in 0..(8.0 / CONTROL_PERIOD) as u64 {
        let th = omega_r * k as f64 * CONTROL_PERIOD;
        let di = hf_current_reference(0.1, n, th);
        let dv = small_signal_voltage_oracle(di, omega_r, n, r, r, &p);
        let (v, i) = pipe.push(dv.x1, di.x1);
        est = hf_resistance(&v, &i, 0.0);
    }
    let worst = est.map_or(f64::INFINITY, |e| (e - r).abs() / r);
    check("R-L identity through the DSP chain", worst, 0.02)
}

fn temperature_round_trip() -> Check {
    let c = TempCoefficients {
        alpha_cu: 0.00393,
        alpha_mag: 0.0012,
        t0: 25.0,
        r_s0: 2.85,
        r_mag0: 1.2,
    };
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let t_s = 20.0 + 2.0 * k as f64;
        let t_r = 140.0 - 2.3 * k as f64;
        let r = stator_resistance_at(t_s, &c) + magnet_resistance_at(t_r, &c);
        worst = worst.max((rotor_temperature(r, t_s, &c) - t_r).abs());
    }
    check("temperature model round trip", worst, 1e-9)
}

fn skin_depth_values() -> Check {
    let mut worst: f64 = 0.0;
    for (f, mm) in [(300.0, 33.6), (420.0, 28.4), (540.0, 25.0)] {
        let d = skin_depth(1.4e-6, 1.05 * MU_0, TAU * f).expect("valid inputs");
        worst = worst.max((d * 1e3 - mm).abs());
    }
    check("skin depth of magnet material", worst, 0.05)
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
