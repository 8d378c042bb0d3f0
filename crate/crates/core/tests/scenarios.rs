use rotortherm::harness::{format_csv, run_scenario, sweep_speeds, ScenarioConfig, CSV_HEADER};
use rotortherm::injection::injection_active;

fn short(duration_s: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.run.duration_s = duration_s;
    cfg
}

#[test]
fn zero_duration_gives_empty_log() {
    let out = run_scenario(&short(0.0)).unwrap();
    assert!(out.log.rows.is_empty());
    assert!(out.summary.windows.is_empty());
    let text = format_csv(&out.log);
    assert_eq!(text.lines().nth(1), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn log_is_uniform_and_marks_windows() {
    let mut cfg = short(1.2);
    cfg.injection.on_s = 0.5;
    cfg.injection.period_s = 0.8;
    let out = run_scenario(&cfg).unwrap();
    let rows = &out.log.rows;
    assert_eq!(rows.len(), 1200);
    assert_eq!(out.log.decimation, 20);
    assert_eq!(out.summary.control_steps, 24_000);
    for w in rows.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!((w[1].t - w[0].t - 1e-3).abs() < 1e-9);
    }
    // HF columns are only populated inside injection windows
    for r in rows {
        if r.r_hf.is_some() {
            assert!(injection_active(r.t, &cfg.injection).active, "estimate outside window at t = {}", r.t);
        }
    }
    assert_eq!(out.summary.windows.len(), 2);
}

#[test]
fn flux_scenario_reports_one_settled_estimate_per_window() {
    let mut cfg = short(16.0);
    cfg.run.load_pct_of_rated = 100.0;
    let out = run_scenario(&cfg).unwrap();
    assert_eq!(out.summary.windows.len(), 1);
    let w = &out.summary.windows[0];
    assert!(w.settled_samples > 0);
    let (m, p) = (w.mean_r_hf.unwrap(), w.mean_plant_r_hf.unwrap());
    assert!((m - p).abs() / p < 0.05, "R_hf {m} vs plant {p}");
    assert!(out.summary.max_abs_temp_error_c.is_some());
}

#[test]
fn sweep_shapes() {
    let cfg = short(0.3);
    assert!(sweep_speeds(&cfg, &[]).unwrap().is_empty());
    let one = sweep_speeds(&cfg, &[600.0]).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].summary.speed_rpm, 600.0);
    let three = sweep_speeds(&cfg, &[1200.0, 600.0, 900.0]).unwrap();
    let speeds: Vec<f64> = three.iter().map(|o| o.summary.speed_rpm).collect();
    assert_eq!(speeds, [1200.0, 600.0, 900.0]);
}

#[test]
fn sweep_matches_individual_runs() {
    let cfg = short(0.2);
    let swept = sweep_speeds(&cfg, &[900.0]).unwrap();
    let mut single = cfg.clone();
    single.run.speed_setpoint_rpm = 900.0;
    let direct = run_scenario(&single).unwrap();
    assert_eq!(format_csv(&swept[0].log), format_csv(&direct.log));
}

#[test]
fn seed_changes_noisy_runs_only() {
    let mut a = short(0.2);
    a.noise.enabled = true;
    let mut b = a.clone();
    b.run.seed = 99;
    assert_ne!(format_csv(&run_scenario(&a).unwrap().log), format_csv(&run_scenario(&b).unwrap().log));
    a.noise.enabled = false;
    b.noise.enabled = false;
    assert_eq!(format_csv(&run_scenario(&a).unwrap().log), format_csv(&run_scenario(&b).unwrap().log));
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = short(1.0);
    cfg.run.dt_s = 3e-5;
    let err = run_scenario(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

fn docs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

#[test]
fn shipped_example_matches_defaults() {
    let cfg = ScenarioConfig::load(&docs_dir().join("example.toml")).unwrap();
    assert_eq!(cfg, ScenarioConfig::default());
}

#[test]
fn shipped_scenarios_load() {
    for name in ["sweep.toml", "heating_flux.toml", "heating_torque.toml"] {
        let cfg = ScenarioConfig::load(&docs_dir().join(name)).unwrap();
        assert!(cfg.run.duration_s > 0.0, "{name}");
    }
}
