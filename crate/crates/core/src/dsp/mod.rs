//! Harmonic phasor extraction.
//!
//! Each measured signal passes through a Butterworth bandpass centred on the
//! injection frequency, a circular-array single-bin DFT, and second-order
//! lowpass smoothing of magnitude and (unwrapped) angle.

mod biquad;
mod phasor;
mod smooth;

pub use biquad::{Biquad, BiquadCoeffs, ButterworthBandpass};
pub use phasor::{PhasorEstimate, PhasorExtractor};
pub use smooth::{Lowpass2, PhasorSmoother};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    /// Quality factor of the bandpass pre-filters at the injection frequency.
    pub bandpass_q: f64,
    /// Corner of the magnitude/angle smoothing filters (Hz).
    pub lowpass_hz: f64,
    /// Current phasors below this fraction of the injected magnitude are
    /// treated as absent.
    pub current_floor_frac: f64,
    /// Time after the start of an injection window from which estimates count
    /// as settled (s).
    pub settle_s: f64,
    /// Samples ignored after a reset before the smoother is primed (s); covers
    /// the bandpass start-up transient.
    pub warmup_s: f64,
    /// Subtract the per-period change of the current-model flux from the
    /// voltage channel before phasor extraction. The real part of `V/I` for a
    /// steady injected harmonic is unchanged; back-EMF sidebands and
    /// ripple cross-talk through the saliency are removed.
    pub decouple_voltage: bool,
    /// Write raw and bandpassed samples during injection windows.
    pub debug_tap: bool,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            bandpass_q: 5.0,
            lowpass_hz: 0.5,
            current_floor_frac: 0.2,
            settle_s: 6.0,
            warmup_s: 0.1,
            decouple_voltage: true,
            debug_tap: false,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandpass_q.is_finite() && self.bandpass_q > 0.5) {
            return Err(Error::config("dsp.bandpass_q must be > 0.5"));
        }
        if !(self.lowpass_hz.is_finite() && self.lowpass_hz > 0.0) {
            return Err(Error::config("dsp.lowpass_hz must be > 0"));
        }
        if !(self.current_floor_frac.is_finite() && self.current_floor_frac >= 0.0) {
            return Err(Error::config("dsp.current_floor_frac must be >= 0"));
        }
        if !(self.settle_s.is_finite() && self.settle_s >= 0.0) {
            return Err(Error::config("dsp.settle_s must be >= 0"));
        }
        if !(self.warmup_s.is_finite() && self.warmup_s >= 0.0) {
            return Err(Error::config("dsp.warmup_s must be >= 0"));
        }
        Ok(())
    }
}

/// Bandpass -> phasor extractor -> smoother for one signal.
#[derive(Clone, Debug)]
pub struct HfChannel {
    bandpass: ButterworthBandpass,
    extractor: PhasorExtractor,
    smoother: PhasorSmoother,
    last_filtered: f64,
    warmup: u64,
    seen: u64,
}

impl HfChannel {
    /// Channel tuned to `omega0` (rad/s) at sample period `t_s`. The DFT window
    /// uses the nearest integer number of samples per period.
    pub fn new(omega0: f64, t_s: f64, config: &DspConfig) -> Result<Self> {
        let f0 = omega0 / std::f64::consts::TAU;
        Ok(HfChannel {
            bandpass: ButterworthBandpass::design(f0, config.bandpass_q, 1.0 / t_s)?,
            extractor: PhasorExtractor::nearest(omega0, t_s)?,
            smoother: PhasorSmoother::new(config.lowpass_hz, 1.0 / t_s)?,
            last_filtered: 0.0,
            warmup: (config.warmup_s / t_s).round() as u64,
            seen: 0,
        })
    }

    pub fn push(&mut self, x: f64) -> PhasorEstimate {
        let y = self.bandpass.step(x);
        self.last_filtered = y;
        let mut raw = self.extractor.update(y);
        self.seen += 1;
        if self.seen <= self.warmup {
            raw.settled = false;
        }
        self.smoother.smooth(raw)
    }

    pub fn last_filtered(&self) -> f64 {
        self.last_filtered
    }

    pub fn extractor(&self) -> &PhasorExtractor {
        &self.extractor
    }

    pub fn reset(&mut self) {
        self.bandpass.reset();
        self.extractor.reset();
        self.smoother.reset();
        self.last_filtered = 0.0;
        self.seen = 0;
    }
}

/// Paired voltage and current channels.
#[derive(Clone, Debug)]
pub struct HfPhasorPipeline {
    pub voltage: HfChannel,
    pub current: HfChannel,
}

impl HfPhasorPipeline {
    pub fn new(omega0: f64, t_s: f64, config: &DspConfig) -> Result<Self> {
        let ch = HfChannel::new(omega0, t_s, config)?;
        Ok(HfPhasorPipeline {
            voltage: ch.clone(),
            current: ch,
        })
    }

    pub fn push(&mut self, v: f64, i: f64) -> (PhasorEstimate, PhasorEstimate) {
        (self.voltage.push(v), self.current.push(i))
    }

    pub fn reset(&mut self) {
        self.voltage.reset();
        self.current.reset();
    }
}
