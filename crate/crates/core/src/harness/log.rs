use std::io::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Column contract of the run log, in order.
pub const CSV_HEADER: &str = "t,i_a,i_b,i_c,v_alpha,v_beta,lambda_alpha,lambda_beta,t_em,speed_rpm,\
v_hf_mag,v_hf_ang,i_hf_mag,i_hf_ang,r_hf,t_s_true,t_r_true,t_r_est";

const COLUMNS: usize = 18;

/// One logged instant. HF quantities are `None` outside injection windows and
/// while the estimates are not yet available.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub i_abc: [f64; 3],
    pub v_alpha: f64,
    pub v_beta: f64,
    pub lambda_alpha: f64,
    pub lambda_beta: f64,
    pub t_em: f64,
    pub speed_rpm: f64,
    /// `(magnitude, angle)`
    pub v_hf: Option<(f64, f64)>,
    pub i_hf: Option<(f64, f64)>,
    pub r_hf: Option<f64>,
    pub t_s_true: f64,
    pub t_r_true: f64,
    pub t_r_est: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    /// Control periods per row.
    pub decimation: u32,
    pub rows: Vec<LogRow>,
}

/// Scientific notation with 9 significant digits.
fn sig9(x: f64) -> String {
    // fold -0 into 0
    format!("{:.8e}", x + 0.0)
}

/// CSV text: a `#` line carrying the decimation factor, the header, then one
/// line per row. Floats carry 9 significant digits; missing values are empty.
pub fn format_csv(log: &RunLog) -> String {
    let mut out = Vec::with_capacity(64 + log.rows.len() * 260);
    writeln!(out, "# decimation={}", log.decimation).expect("write to vec");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(',')).expect("write to vec");
    let mut cells: Vec<String> = Vec::with_capacity(COLUMNS);
    for r in &log.rows {
        let fields: [Option<f64>; COLUMNS] = [
            Some(r.t),
            Some(r.i_abc[0]),
            Some(r.i_abc[1]),
            Some(r.i_abc[2]),
            Some(r.v_alpha),
            Some(r.v_beta),
            Some(r.lambda_alpha),
            Some(r.lambda_beta),
            Some(r.t_em),
            Some(r.speed_rpm),
            r.v_hf.map(|p| p.0),
            r.v_hf.map(|p| p.1),
            r.i_hf.map(|p| p.0),
            r.i_hf.map(|p| p.1),
            r.r_hf,
            Some(r.t_s_true),
            Some(r.t_r_true),
            r.t_r_est,
        ];
        cells.clear();
        cells.extend(fields.iter().map(|f| f.map_or_else(String::new, sig9)));
        w.write_record(&cells).expect("write to vec");
    }
    let out = w.into_inner().expect("flush to vec");
    String::from_utf8(out).expect("ascii output")
}

pub fn emit_csv(log: &RunLog, path: &Path) -> Result<()> {
    std::fs::write(path, format_csv(log)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv_str(text: &str, path: &Path) -> Result<RunLog> {
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    if first.is_empty() {
        return Err(bad("empty file".into()));
    }
    let decimation = first
        .strip_prefix("# decimation=")
        .and_then(|s| s.trim().parse::<u32>().ok())
        .ok_or_else(|| bad(format!("expected '# decimation=N', got {first:?}")))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.is_empty() {
        return Err(bad("missing header".into()));
    }
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let ln = rec.position().map_or(0, |p| p.line() + 1);
        if rec.len() != COLUMNS {
            return Err(bad(format!("line {ln}: {} fields, expected {COLUMNS}", rec.len())));
        }
        let mut v = [None; COLUMNS];
        for (k, c) in rec.iter().enumerate() {
            if !c.is_empty() {
                v[k] = Some(
                    c.parse::<f64>()
                        .map_err(|e| bad(format!("line {ln}, column {}: {e}", k + 1)))?,
                );
            }
        }
        let req = |k: usize| v[k].ok_or_else(|| bad(format!("line {ln}: column {} is required", k + 1)));
        let pair = |a: usize, b: usize| match (v[a], v[b]) {
            (Some(x), Some(y)) => Some((x, y)),
            _ => None,
        };
        rows.push(LogRow {
            t: req(0)?,
            i_abc: [req(1)?, req(2)?, req(3)?],
            v_alpha: req(4)?,
            v_beta: req(5)?,
            lambda_alpha: req(6)?,
            lambda_beta: req(7)?,
            t_em: req(8)?,
            speed_rpm: req(9)?,
            v_hf: pair(10, 11),
            i_hf: pair(12, 13),
            r_hf: v[14],
            t_s_true: req(15)?,
            t_r_true: req(16)?,
            t_r_est: v[17],
        });
    }
    Ok(RunLog { decimation, rows })
}

pub fn parse_csv(path: &Path) -> Result<RunLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_str(&text, path)
}
