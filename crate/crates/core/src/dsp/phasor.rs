use std::f64::consts::TAU;

use crate::{Error, Result};

/// Single-bin DFT estimate of `magnitude * cos(w0 t + angle)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasorEstimate {
    pub magnitude: f64,
    pub angle: f64,
    /// A full window of samples has been accumulated.
    pub settled: bool,
}

impl PhasorEstimate {
    pub const EMPTY: PhasorEstimate = PhasorEstimate {
        magnitude: 0.0,
        angle: 0.0,
        settled: false,
    };
}

/// Sliding single-frequency DFT over the last `N` samples, kept as two
/// circular arrays of products so each update is O(1).
#[derive(Clone, Debug)]
pub struct PhasorExtractor {
    y: Vec<f64>,
    z: Vec<f64>,
    a: f64,
    b: f64,
    write: usize,
    count: u64,
    omega0: f64,
    t_s: f64,
    /// Window length is an exact number of periods: the reference phase is
    /// taken modulo the window so it cannot drift.
    exact: bool,
    leakage_bound: f64,
}

impl PhasorExtractor {
    /// Requires `2 pi / (w0 T)` to be an integer (within 1e-9).
    pub fn new(omega0: f64, t_s: f64) -> Result<Self> {
        let n_exact = Self::samples_per_period(omega0, t_s)?;
        let n = n_exact.round();
        if (n_exact - n).abs() > 1e-9 * n_exact.max(1.0) {
            return Err(Error::config(format!(
                "{n_exact} samples per period is not an integer; use the nearest-N constructor"
            )));
        }
        Self::build(omega0, t_s, n as usize, true, 0.0)
    }

    /// Rounds the window to the nearest integer and records the worst-case
    /// relative leakage of the negative-frequency image into the estimate.
    pub fn nearest(omega0: f64, t_s: f64) -> Result<Self> {
        let n_exact = Self::samples_per_period(omega0, t_s)?;
        let n = n_exact.round().max(2.0);
        let exact = (n_exact - n).abs() <= 1e-9 * n_exact;
        let wt = omega0 * t_s;
        let leakage = if exact {
            0.0
        } else {
            (n * wt).sin().abs() / (n * wt.sin().abs())
        };
        Self::build(omega0, t_s, n as usize, exact, leakage)
    }

    fn samples_per_period(omega0: f64, t_s: f64) -> Result<f64> {
        if !(omega0.is_finite() && omega0 > 0.0 && t_s.is_finite() && t_s > 0.0) {
            return Err(Error::domain(format!(
                "phasor extractor needs positive frequency and period, got {omega0}, {t_s}"
            )));
        }
        let n = TAU / (omega0 * t_s);
        if n < 2.0 {
            return Err(Error::domain(format!("frequency {omega0} rad/s above Nyquist")));
        }
        Ok(n)
    }

    fn build(omega0: f64, t_s: f64, n: usize, exact: bool, leakage_bound: f64) -> Result<Self> {
        Ok(PhasorExtractor {
            y: vec![0.0; n],
            z: vec![0.0; n],
            a: 0.0,
            b: 0.0,
            write: 0,
            count: 0,
            omega0,
            t_s,
            exact,
            leakage_bound,
        })
    }

    pub fn window_len(&self) -> usize {
        self.y.len()
    }

    pub fn leakage_bound(&self) -> f64 {
        self.leakage_bound
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    fn reference_phase(&self) -> f64 {
        if self.exact {
            let n = self.y.len() as u64;
            TAU * (self.count % n) as f64 / n as f64
        } else {
            (self.omega0 * self.t_s * self.count as f64).rem_euclid(TAU)
        }
    }

    pub fn update(&mut self, x: f64) -> PhasorEstimate {
        let phase = self.reference_phase();
        let yi = x * phase.cos();
        let zi = x * phase.sin();
        let k = self.write;
        self.a += yi - self.y[k];
        self.b += zi - self.z[k];
        self.y[k] = yi;
        self.z[k] = zi;
        self.count += 1;
        self.write += 1;
        if self.write == self.y.len() {
            self.write = 0;
            // refresh the running sums to stop round-off accumulation
            self.a = self.y.iter().sum();
            self.b = self.z.iter().sum();
        }
        self.estimate()
    }

    pub fn estimate(&self) -> PhasorEstimate {
        let n = self.y.len() as f64;
        PhasorEstimate {
            magnitude: 2.0 / n * self.a.hypot(self.b),
            angle: (-self.b).atan2(self.a),
            settled: self.count >= self.y.len() as u64,
        }
    }

    pub fn reset(&mut self) {
        self.y.iter_mut().for_each(|v| *v = 0.0);
        self.z.iter_mut().for_each(|v| *v = 0.0);
        self.a = 0.0;
        self.b = 0.0;
        self.write = 0;
        self.count = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const T: f64 = 5e-5;

    fn feed(ex: &mut PhasorExtractor, c: f64, phi: f64, samples: u64) -> PhasorEstimate {
        let w = ex.omega0();
        let mut last = PhasorEstimate::EMPTY;
        for k in 0..samples {
            last = ex.update(c * (w * T * k as f64 + phi).cos());
        }
        last
    }

    #[test]
    fn exact_window_recovers_sinusoid() {
        let w = TAU * 100.0; // 200 samples per period
        let mut ex = PhasorExtractor::new(w, T).unwrap();
        assert_eq!(ex.window_len(), 200);
        let e = feed(&mut ex, 1.7, 0.6, 199);
        assert!(!e.settled);
        let e = ex.update(1.7 * (w * T * 199.0 + 0.6).cos());
        assert!(e.settled);
        assert!((e.magnitude - 1.7).abs() < 1e-10 * 1.7);
        assert!((e.angle - 0.6).abs() < 1e-10);
    }

    #[test]
    fn stays_accurate_over_many_windows() {
        let w = TAU * 100.0;
        let mut ex = PhasorExtractor::new(w, T).unwrap();
        let mut last = PhasorEstimate::EMPTY;
        for k in 0..400_000u64 {
            // phase expressed modulo the period so the test signal is exact
            let ph = TAU * (k % 200) as f64 / 200.0 - 2.1;
            last = ex.update(0.3 * ph.cos());
        }
        assert!((last.magnitude - 0.3).abs() < 1e-10 * 0.3);
        assert!((last.angle + 2.1).abs() < 1e-10);
    }

    #[test]
    fn non_integer_rejected_by_strict() {
        let w = TAU * 150.0; // 133.33 samples
        assert!(PhasorExtractor::new(w, T).is_err());
        let ex = PhasorExtractor::nearest(w, T).unwrap();
        assert_eq!(ex.window_len(), 133);
        assert!(ex.leakage_bound() > 0.0 && ex.leakage_bound() < 0.02);
    }

    #[test]
    fn nearest_error_within_leakage_bound() {
        let w = TAU * 150.0;
        let mut ex = PhasorExtractor::nearest(w, T).unwrap();
        let bound = ex.leakage_bound();
        let mut worst: f64 = 0.0;
        for k in 0..20_000u64 {
            let e = ex.update((w * T * k as f64 + 0.4).cos());
            if e.settled {
                worst = worst.max((e.magnitude - 1.0).abs());
            }
        }
        assert!(worst <= bound * 1.0001 + 1e-12, "{worst} vs {bound}");
    }

    #[test]
    fn angle_convention_sine_is_minus_half_pi() {
        let w = TAU * 100.0;
        let mut ex = PhasorExtractor::new(w, T).unwrap();
        let e = feed(&mut ex, 1.0, -PI / 2.0, 200);
        assert!((e.angle + PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn reset_clears_state() {
        let w = TAU * 100.0;
        let mut ex = PhasorExtractor::new(w, T).unwrap();
        feed(&mut ex, 1.0, 0.0, 500);
        ex.reset();
        let e = ex.estimate();
        assert_eq!(e.magnitude, 0.0);
        assert!(!e.settled);
    }

    #[test]
    fn invalid_frequency() {
        assert!(PhasorExtractor::nearest(0.0, T).is_err());
        assert!(PhasorExtractor::nearest(TAU * 15_000.0, T).is_err());
    }
}
