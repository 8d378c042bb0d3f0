use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotortherm::harness::{emit_csv, emit_summary, run_scenario, run_scenario_with_tap, sweep_speeds, ScenarioConfig};
use rotortherm::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "rotortherm", version, about = "Rotor magnet temperature estimation by HF injection (simulation)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write run.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario at several speed setpoints (rpm).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        speeds: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            ensure_dir(&out)?;
            let res = if cfg.dsp.debug_tap {
                let path = out.join("dsp_tap.csv");
                let io_err = |e: csv::Error| Error::Io {
                    path: path.clone(),
                    source: e.into(),
                };
                let mut w = csv::Writer::from_path(&path).map_err(io_err)?;
                w.write_record(["t", "v_alpha", "i_alpha", "v_alpha_bp", "i_alpha_bp"])
                    .map_err(io_err)?;
                let mut failed: Option<csv::Error> = None;
                let mut tap = |t: f64, v: f64, i: f64, vf: f64, fi: f64| {
                    if failed.is_none() {
                        let rec = [t, v, i, vf, fi].map(|x| format!("{x:.8e}"));
                        failed = w.write_record(&rec).err();
                    }
                };
                let res = run_scenario_with_tap(&cfg, Some(&mut tap))?;
                if let Some(e) = failed {
                    return Err(io_err(e));
                }
                w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;
                res
            } else {
                run_scenario(&cfg)?
            };
            emit_csv(&res.log, &out.join("run.csv"))?;
            emit_summary(&res.summary, &out.join("summary.json"))?;
            println!(
                "{} rows, {} windows, max |T_r error| = {}",
                res.log.rows.len(),
                res.summary.windows.len(),
                res.summary
                    .max_abs_temp_error_c
                    .map_or("n/a".to_string(), |e| format!("{e:.3} C"))
            );
            Ok(0)
        }
        Command::Sweep { config, speeds, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            ensure_dir(&out)?;
            let results = sweep_speeds(&cfg, &speeds)?;
            let mut summaries = Vec::with_capacity(results.len());
            for (rpm, res) in speeds.iter().zip(results) {
                emit_csv(&res.log, &out.join(format!("run_{rpm}rpm.csv")))?;
                let r = res.summary.windows.iter().filter_map(|w| w.mean_r_hf).next_back();
                println!(
                    "{rpm} rpm: mean R_hf = {}",
                    r.map_or("n/a".to_string(), |r| format!("{r:.4} ohm"))
                );
                summaries.push(res.summary);
            }
            emit_summary(&summaries, &out.join("summary.json"))?;
            Ok(0)
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut failed = 0;
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            println!("{}/{} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
