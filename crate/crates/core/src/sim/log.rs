//! Per-step telemetry and its CSV form.

use std::io::Write;

use nalgebra::{DVector, Vector6};

use crate::controller::TASK_ROW_NAMES;
use crate::error::{Error, Result};
use crate::wrench::{Wrench, WrenchClass};

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub psi: f64,
    pub psidot: f64,
    pub psiddot: f64,
    pub x: Vector6<f64>,
    pub x_d: Vector6<f64>,
    pub xdot: Vector6<f64>,
    pub xdot_d: Vector6<f64>,
    /// `x − x_d`
    pub tracking_err: Vector6<f64>,
    pub tau: DVector<f64>,
    pub f_ext: Wrench,
    pub alpha: f64,
    /// Lyapunov candidate, logged as `V`.
    pub lyapunov: f64,
    /// Class of a non-zero wrench relative to the desired velocity.
    pub wrench_class: Option<WrenchClass>,
}

const VECTOR_FIELDS: [&str; 5] = ["x", "x_d", "xdot", "xdot_d", "tracking_err"];
const WRENCH_SUFFIXES: [&str; 6] = ["x", "y", "z", "rx", "ry", "rz"];

pub fn csv_header(n_joints: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "psi", "psidot", "psiddot"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for field in VECTOR_FIELDS {
        h.extend(TASK_ROW_NAMES.iter().map(|s| format!("{field}_{s}")));
    }
    h.extend((0..n_joints).map(|i| format!("tau_{i}")));
    h.extend(WRENCH_SUFFIXES.iter().map(|s| format!("f_ext_{s}")));
    h.extend(["alpha", "V", "wrench_class"].iter().map(|s| s.to_string()));
    h
}

/// Shortest-form decimal with at most nine significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn row(r: &LogRecord) -> Vec<String> {
    let mut out: Vec<String> = [r.t, r.psi, r.psidot, r.psiddot]
        .iter()
        .map(|v| format_sig9(*v))
        .collect();
    for v in [&r.x, &r.x_d, &r.xdot, &r.xdot_d, &r.tracking_err] {
        out.extend(v.iter().map(|c| format_sig9(*c)));
    }
    out.extend(r.tau.iter().map(|c| format_sig9(*c)));
    out.extend(r.f_ext.to_vector6().iter().map(|c| format_sig9(*c)));
    out.push(format_sig9(r.alpha));
    out.push(format_sig9(r.lyapunov));
    out.push(r.wrench_class.map_or_else(|| "none".to_string(), |c| c.to_string()));
    out
}

pub fn write_csv<W: Write>(records: &[LogRecord], out: W) -> Result<()> {
    let n = records.first().map_or(0, |r| r.tau.len());
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Domain(format!("writing CSV: {e}"));
    w.write_record(csv_header(n)).map_err(io)?;
    for r in records {
        w.write_record(row(r)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("writing CSV: {e}")))?;
    Ok(())
}
