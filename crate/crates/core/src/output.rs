//! CSV and JSON writers for command results.
//!
//! Every CSV starts with a `# params: {...}` comment carrying the resolved
//! configuration, then a header row. Floats use Rust's shortest round-trip
//! representation so repeated runs are byte-identical.

use std::fmt::Write as _;

use serde::Serialize;

use crate::detection::{RateBudget, G2};
use crate::error::Result;
use crate::sweep::{ChshCurve, SpectrumTable, SweepGrid};
use crate::contour::Polyline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest round-trip decimal; exponent form outside [1e-5, 1e16).
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(params: &serde_json::Value, header: &[&str]) -> Self {
        let mut buf = format!("# params: {params}\n");
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv { buf }
    }

    pub fn comment(&mut self, text: &str) {
        let _ = writeln!(self.buf, "# {text}");
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<&str> = cells.iter().map(|c| c.as_ref()).collect();
        self.buf.push_str(&line.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// `{"params": ..., "result": ...}` as one pretty-printed document.
pub fn json_document<T: Serialize>(params: &serde_json::Value, result: &T) -> Result<String> {
    let doc = serde_json::json!({ "params": params, "result": result });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn spectrum_csv(params: &serde_json::Value, table: &SpectrumTable) -> String {
    let mut csv = Csv::new(params, &["freq_hz", "omega_rad_s", "u", "v", "w"]);
    for s in &table.states {
        csv.row(&[
            format_float(s.omega / std::f64::consts::TAU),
            format_float(s.omega),
            format_float(s.u),
            format_float(s.v),
            format_float(s.w),
        ]);
    }
    csv.finish()
}

pub fn grid_csv(params: &serde_json::Value, grid: &SweepGrid) -> String {
    let names: Vec<&String> = grid.fields.keys().collect();
    let mut header = vec![grid.x_axis.name.as_str(), grid.y_axis.name.as_str(), "ix", "iy", "status"];
    header.extend(names.iter().map(|s| s.as_str()));
    let mut csv = Csv::new(params, &header);
    let (xs, ys) = (grid.x_axis.values(), grid.y_axis.values());
    for (iy, y) in ys.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            let k = iy * grid.nx() + ix;
            let mut row = vec![
                format_float(*x),
                format_float(*y),
                ix.to_string(),
                iy.to_string(),
                grid.status[k].as_str().to_string(),
            ];
            row.extend(names.iter().map(|n| opt(grid.fields[*n][k])));
            csv.row(&row);
        }
    }
    csv.finish()
}

pub fn contours_csv<'a>(
    params: &serde_json::Value,
    x_name: &str,
    y_name: &str,
    contours: impl IntoIterator<Item = (&'a String, &'a Vec<Polyline>)>,
) -> String {
    let mut csv = Csv::new(params, &["contour", "line", x_name, y_name]);
    for (name, lines) in contours {
        for (k, line) in lines.iter().enumerate() {
            for (x, y) in line {
                csv.row(&[name.clone(), k.to_string(), format_float(*x), format_float(*y)]);
            }
        }
    }
    csv.finish()
}

pub fn chsh_csv(params: &serde_json::Value, curves: &[ChshCurve]) -> String {
    let mut csv = Csv::new(params, &["n_ba", "phi_e", "s"]);
    for c in curves {
        for (phi, s) in c.phi_e.iter().zip(&c.s) {
            csv.row(&[format_float(c.n_ba), format_float(*phi), format_float(*s)]);
        }
    }
    for c in curves {
        csv.comment(&format!(
            "n_ba={} max_abs_s={} argmax_phi_e={}",
            format_float(c.n_ba),
            format_float(c.max_abs_s),
            format_float(c.argmax_phi_e)
        ));
    }
    csv.finish()
}

pub fn rates_csv(params: &serde_json::Value, r: &RateBudget) -> String {
    let g2 = match r.g2 {
        G2::Finite(g) => format_float(g),
        G2::Infinite => "inf".into(),
        G2::Undefined => String::new(),
    };
    let mut csv = Csv::new(params, &["quantity", "value"]);
    let rows: [(&str, String); 11] = [
        ("r_o", format_float(r.r_o)),
        ("r_e", format_float(r.r_e)),
        ("r_cc", format_float(r.r_cc)),
        ("r_ac", format_float(r.r_ac)),
        ("r_c", format_float(r.r_c)),
        ("g2", g2),
        ("xi_o", opt(r.xi_o)),
        ("xi_e", opt(r.xi_e)),
        ("condition_ratio", opt(r.condition_ratio)),
        ("duty_cycle", format_float(r.duty_cycle)),
        ("joint_rate", format_float(r.joint_rate)),
    ];
    for (k, v) in rows {
        csv.row(&[k.to_string(), v]);
    }
    csv.finish()
}
