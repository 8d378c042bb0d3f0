use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ScenarioConfig;
use super::log::{LogRow, RunLog};
use super::summary::{FluxStats, RunSummary, WindowSummary};
use crate::dsp::{HfPhasorPipeline, Lowpass2, PhasorEstimate};
use crate::dtc::{inverter_voltage, ControlReferences, DtcController, SpeedRegulator};
use crate::injection::{apply_injection, injection_active, HfTerms};
use crate::machine::{
    clarke, eddy_loss_density, electromagnetic_torque, flux_linkage_stationary, inverse_clarke, inverse_park, park,
    step_electrical, step_mechanical, ElectroMechState, Frame, FrameVector,
};
use crate::thermal::{
    hf_resistance, magnet_resistance_at, rotor_temperature_checked, stator_resistance_at, step_thermal, ThermalState,
};
use crate::{Error, Result, CONTROL_PERIOD};

/// Result of one scenario.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub log: RunLog,
    pub summary: RunSummary,
}

/// Optional full-rate sample sink, called once per control period during
/// injection windows with `(t, v_alpha, i_alpha, v_filtered, i_filtered)`.
pub type TapFn<'a> = dyn FnMut(f64, f64, f64, f64, f64) + 'a;

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    run_scenario_with_tap(config, None)
}

struct WindowAccumulator {
    index: u64,
    start_s: f64,
    end_s: f64,
    /// `(phase, r_hf)` for every control period with an available estimate.
    r_series: Vec<(f64, f64)>,
    settled_r_sum: f64,
    settled_plant_sum: f64,
    settled_n: u64,
    max_temp_err: Option<f64>,
    out_of_range: u64,
}

impl WindowAccumulator {
    fn finish(self) -> WindowSummary {
        let final_r = self.r_series.last().map(|p| p.1);
        let settling_time_s = final_r.map(|fin| {
            let tol = 0.05 * fin.abs();
            match self.r_series.iter().rposition(|&(_, r)| (r - fin).abs() > tol) {
                Some(k) if k + 1 < self.r_series.len() => self.r_series[k + 1].0,
                Some(k) => self.r_series[k].0,
                None => self.r_series[0].0,
            }
        });
        let mean = |s: f64| (self.settled_n > 0).then(|| s / self.settled_n as f64);
        WindowSummary {
            index: self.index,
            start_s: self.start_s,
            end_s: self.end_s,
            settled_samples: self.settled_n,
            mean_r_hf: mean(self.settled_r_sum),
            mean_plant_r_hf: mean(self.settled_plant_sum),
            final_r_hf: final_r,
            settling_time_s,
            max_abs_temp_error_c: self.max_temp_err,
            out_of_range_estimates: self.out_of_range,
        }
    }
}

/// [`run_scenario`] with an optional DSP tap.
pub fn run_scenario_with_tap(config: &ScenarioConfig, mut tap: Option<&mut TapFn<'_>>) -> Result<RunOutput> {
    config.validate()?;
    let machine = &config.machine;
    let dtc_cfg = config.dtc.resolved(machine);
    let inj = &config.injection;
    let run = &config.run;
    let th = &config.thermal;

    let substeps = run.substeps()?;
    let dt = CONTROL_PERIOD / substeps as f64;
    let decimation = run.decimation()?;
    let steps = run.control_steps();

    let rpm = run.speed_setpoint_rpm;
    let omega_e = machine.rpm_to_electrical(rpm);
    let omega_mech_ref = omega_e / machine.pole_pairs();
    let m = inj.magnitude(machine);
    let n = inj.harmonic_order;
    let omega_hf = n as f64 * omega_e;
    let coeffs = th.coefficients(machine.r_s, rpm);
    coeffs.validate()?;
    let current_floor = config.dsp.current_floor_frac * m;
    let settle_s = config.dsp.settle_s;
    let t_load = run.load_pct_of_rated / 100.0 * machine.rated_torque();

    let mut pipeline = HfPhasorPipeline::new(omega_hf, CONTROL_PERIOD, &config.dsp)?;
    // stator temperature seen by the inversion gets the same delay as the phasors
    let mut t_s_filter = Lowpass2::new(config.dsp.lowpass_hz, 1.0 / CONTROL_PERIOD)?;
    let dft_len = pipeline.voltage.extractor().window_len();
    let leakage = pipeline.voltage.extractor().leakage_bound();

    // background magnet eddy loss from the slot-harmonic field
    let p_mag_bg = eddy_loss_density(
        th.magnet_sigma,
        th.harmonic_order * omega_e,
        th.magnet_thickness,
        th.harmonic_flux_density,
    )? * th.magnet_volume;

    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let i_noise = Normal::new(0.0, config.noise.current_std).map_err(|e| Error::config(e.to_string()))?;
    let v_noise = Normal::new(0.0, config.noise.vdc_std).map_err(|e| Error::config(e.to_string()))?;
    let noisy = config.noise.enabled;

    let mut plant = machine.clone();
    let mut state = ElectroMechState::from_current(FrameVector::zero(Frame::Stationary), 0.0, omega_e, machine);
    let mut thermal = ThermalState::ambient(th.t_ambient);
    let mut dtc = DtcController::new(dtc_cfg.clone(), state.lambda);
    let mut speed = SpeedRegulator::new(dtc_cfg.speed_kp, dtc_cfg.speed_ki, dtc_cfg.torque_limit);
    speed.integral = t_load;

    // rotor-frame lowpass state; the eddy branch sees the complement
    let mut i_lp = FrameVector::zero(Frame::Rotor);
    let eddy_decay = 1.0 - (-std::f64::consts::TAU * config.magnet.eddy_corner_hz * dt).exp();

    let mut rows = Vec::with_capacity((steps / decimation as u64 + 1) as usize);
    let mut windows: Vec<WindowSummary> = Vec::new();
    let mut open: Option<WindowAccumulator> = None;
    let mut last_v = PhasorEstimate::EMPTY;
    let mut last_i = PhasorEstimate::EMPTY;
    let mut last_r: Option<f64> = None;
    let mut last_t_est: Option<f64> = None;
    let mut max_speed_dev: f64 = 0.0;
    let mut base_flux = FluxRange::default();
    let mut inj_flux = FluxRange::default();
    let mut t_em = 0.0;
    let decouple = config.dsp.decouple_voltage;

    for k in 0..steps {
        let t = k as f64 * CONTROL_PERIOD;
        let ws = injection_active(t, inj);

        if ws.active && open.as_ref().map(|w| w.index) != Some(ws.index) {
            if let Some(w) = open.take() {
                windows.push(w.finish());
            }
            pipeline.reset();
            t_s_filter.prime(thermal.t_s);
            last_v = PhasorEstimate::EMPTY;
            last_i = PhasorEstimate::EMPTY;
            last_r = None;
            last_t_est = None;
            open = Some(WindowAccumulator {
                index: ws.index,
                start_s: t,
                end_s: t,
                r_series: Vec::new(),
                settled_r_sum: 0.0,
                settled_plant_sum: 0.0,
                settled_n: 0,
                max_temp_err: None,
                out_of_range: 0,
            });
        } else if !ws.active {
            if let Some(w) = open.take() {
                windows.push(w.finish());
            }
            last_v = PhasorEstimate::EMPTY;
            last_i = PhasorEstimate::EMPTY;
            last_r = None;
            last_t_est = None;
        }

        let i_meas = if noisy { state.i + phase_noise(&mut rng, &i_noise) } else { state.i };
        let v_dc_meas = if noisy { dtc_cfg.v_dc + v_noise.sample(&mut rng) } else { dtc_cfg.v_dc };

        let omega_mech = state.omega_r / machine.pole_pairs();
        let t_ref = speed.update(omega_mech_ref, omega_mech, CONTROL_PERIOD);
        let base = ControlReferences::new(dtc_cfg.lambda_ref, t_ref);
        let refs = if ws.active {
            apply_injection(inj.mode, base, &HfTerms::evaluate(m, n, state.theta, i_meas, machine))
        } else {
            base
        };
        let lambda_hat = dtc.flux_hat();
        if t >= 0.5 {
            let in_window = ws.active && ws.phase_s >= 0.2;
            let after_window = !ws.active && ws.phase_s >= inj.on_s + 0.2;
            if in_window {
                inj_flux.add(lambda_hat);
            } else if after_window || (!ws.active && inj.on_s == 0.0) {
                base_flux.add(lambda_hat);
            }
            if ws.active {
                let dev = (omega_mech - omega_mech_ref).abs() / omega_mech_ref;
                max_speed_dev = max_speed_dev.max(dev);
            }
        }
        let sw = dtc.switch(&refs, i_meas, machine.poles);
        let v = inverter_voltage(sw, dtc_cfg.v_dc);
        let v_meas = inverter_voltage(sw, v_dc_meas);

        if k % decimation as u64 == 0 {
            let abc = inverse_clarke(state.i);
            rows.push(LogRow {
                t,
                i_abc: abc,
                v_alpha: v.x1,
                v_beta: v.x2,
                lambda_alpha: lambda_hat.x1,
                lambda_beta: lambda_hat.x2,
                t_em: electromagnetic_torque(state.lambda, state.i, machine.poles),
                speed_rpm: machine.electrical_to_rpm(state.omega_r),
                v_hf: last_v.settled.then_some((last_v.magnitude, last_v.angle)),
                i_hf: last_i.settled.then_some((last_i.magnitude, last_i.angle)),
                r_hf: last_r,
                t_s_true: thermal.t_s,
                t_r_true: thermal.t_r,
                t_r_est: last_t_est,
            });
        }

        // plant
        let theta_start = state.theta;
        plant.r_s = stator_resistance_at(thermal.t_s, &coeffs);
        let r_mag = magnet_resistance_at(thermal.t_r, &coeffs);
        let mut i_sum = state.i * 0.5;
        let mut sq_sum = 0.0;
        let mut hp_sq_sum = 0.0;
        for s in 0..substeps {
            let i_dq = park(state.theta, state.i);
            i_lp += (i_dq - i_lp) * eddy_decay;
            let i_hp = inverse_park(state.theta, i_dq - i_lp);
            let prev_sq = state.i.dot(&state.i);
            state = step_electrical(&state, v - i_hp * r_mag, dt, &plant);
            t_em = electromagnetic_torque(state.lambda, state.i, machine.poles);
            state.omega_r = step_mechanical(state.omega_r, t_em, t_load, machine.inertia, machine.poles, dt);
            i_sum += if s + 1 == substeps { state.i * 0.5 } else { state.i };
            sq_sum += 0.5 * (prev_sq + state.i.dot(&state.i));
            hp_sq_sum += i_hp.dot(&i_hp);
        }
        if !(state.is_finite() && t_em.is_finite()) {
            return Err(Error::Numerical {
                step: k,
                time_s: t,
                what: format!("machine state {:?}", state),
            });
        }
        let i_mean = i_sum * (1.0 / substeps as f64);
        let i_mean_meas = if noisy { i_mean + phase_noise(&mut rng, &i_noise) } else { i_mean };

        let i_end_meas = if noisy { state.i + phase_noise(&mut rng, &i_noise) } else { state.i };
        let anchor = flux_linkage_stationary(state.theta, i_end_meas, machine);
        let v_dsp = if decouple {
            // remove the current-model flux change over the period
            v_meas - (anchor - flux_linkage_stationary(theta_start, i_meas, machine)) * (1.0 / CONTROL_PERIOD)
        } else {
            v_meas
        };
        dtc.observe(v_meas, i_mean_meas, anchor, plant.r_s, CONTROL_PERIOD);

        let p_cu = 1.5 * plant.r_s * sq_sum / substeps as f64;
        let p_mag = 1.5 * r_mag * hp_sq_sum / substeps as f64 + p_mag_bg;
        thermal = step_thermal(&thermal, p_cu, p_mag, &th.plant, CONTROL_PERIOD);

        if let Some(w) = open.as_mut() {
            let (ve, ie) = pipeline.push(v_dsp.x1, i_mean_meas.x1);
            let t_s_est = t_s_filter.step(thermal.t_s);
            if let Some(tap) = tap.as_deref_mut() {
                tap(t, v_dsp.x1, i_mean_meas.x1, pipeline.voltage.last_filtered(), pipeline.current.last_filtered());
            }
            last_v = ve;
            last_i = ie;
            last_r = hf_resistance(&ve, &ie, current_floor);
            last_t_est = None;
            w.end_s = t + CONTROL_PERIOD;
            if let Some(r) = last_r {
                let est = rotor_temperature_checked(r, t_s_est, &coeffs, (th.plausible_range[0], th.plausible_range[1]));
                last_t_est = Some(est.t_r);
                let phase = ws.phase_s + CONTROL_PERIOD;
                w.r_series.push((phase, r));
                if phase >= settle_s {
                    let plant_r = stator_resistance_at(thermal.t_s, &coeffs) + magnet_resistance_at(thermal.t_r, &coeffs);
                    w.settled_n += 1;
                    w.settled_r_sum += r;
                    w.settled_plant_sum += plant_r;
                    let err = (est.t_r - thermal.t_r).abs();
                    w.max_temp_err = Some(w.max_temp_err.map_or(err, |e: f64| e.max(err)));
                    if est.out_of_range {
                        w.out_of_range += 1;
                    }
                }
            }
        }
    }
    if let Some(w) = open.take() {
        windows.push(w.finish());
    }

    let max_err = windows
        .iter()
        .filter_map(|w| w.max_abs_temp_error_c)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
    let summary = RunSummary {
        speed_rpm: rpm,
        load_pct_of_rated: run.load_pct_of_rated,
        mode: inj.mode,
        harmonic_order: n,
        injection_magnitude_a: m,
        injection_frequency_hz: omega_hf / std::f64::consts::TAU,
        dft_window_samples: dft_len,
        leakage_bound: leakage,
        thermal_compression: th.plant.compression,
        duration_s: steps as f64 * CONTROL_PERIOD,
        control_steps: steps,
        log_decimation: decimation,
        lambda_ref: dtc_cfg.lambda_ref,
        flux_band: dtc_cfg.flux_band,
        plant_r_hf_at_t0: coeffs.r_s0 + coeffs.r_mag0,
        windows,
        max_abs_temp_error_c: max_err,
        max_speed_deviation_pct: 100.0 * max_speed_dev,
        base_flux: base_flux.stats(),
        injected_flux: inj_flux.stats(),
        final_t_s: thermal.t_s,
        final_t_r: thermal.t_r,
    };
    Ok(RunOutput {
        log: RunLog { decimation, rows },
        summary,
    })
}

/// Run one scenario per speed setpoint in parallel; results keep the order of
/// `speeds`.
pub fn sweep_speeds(config: &ScenarioConfig, speeds: &[f64]) -> Result<Vec<RunOutput>> {
    let configs: Vec<ScenarioConfig> = speeds
        .iter()
        .map(|&rpm| {
            let mut c = config.clone();
            c.run.speed_setpoint_rpm = rpm;
            c
        })
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(move || run_scenario(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

fn phase_noise(rng: &mut ChaCha8Rng, dist: &Normal<f64>) -> FrameVector {
    let a = dist.sample(rng);
    let b = dist.sample(rng);
    clarke([a, b, -a - b])
}

#[derive(Default)]
struct FluxRange {
    n: u64,
    r_min: f64,
    r_max: f64,
    a_min: f64,
    a_max: f64,
    b_min: f64,
    b_max: f64,
}

impl FluxRange {
    fn add(&mut self, l: FrameVector) {
        let r = l.magnitude();
        if self.n == 0 {
            *self = FluxRange {
                n: 1,
                r_min: r,
                r_max: r,
                a_min: l.x1,
                a_max: l.x1,
                b_min: l.x2,
                b_max: l.x2,
            };
            return;
        }
        self.n += 1;
        self.r_min = self.r_min.min(r);
        self.r_max = self.r_max.max(r);
        self.a_min = self.a_min.min(l.x1);
        self.a_max = self.a_max.max(l.x1);
        self.b_min = self.b_min.min(l.x2);
        self.b_max = self.b_max.max(l.x2);
    }

    fn stats(&self) -> Option<FluxStats> {
        (self.n > 0).then_some(FluxStats {
            samples: self.n,
            radius_min: self.r_min,
            radius_max: self.r_max,
            center_alpha: 0.5 * (self.a_min + self.a_max),
            center_beta: 0.5 * (self.b_min + self.b_max),
        })
    }
}
