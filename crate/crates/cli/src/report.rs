//! Replicate metrics and CSV/JSON reports.

use std::f64::consts::LN_10;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use smallp_core::specialfn::log_sum_exp;

use crate::CliError;

pub const COLUMNS: [&str; 7] = [
    "target_log10_p",
    "mean_log10_p",
    "ARE",
    "SMSE_literal",
    "rel_RMSE",
    "sd",
    "seconds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

/// One report line. Metrics that need a truth value are `None` without one;
/// `sd` is `None` for a single replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub target_log10_p: Option<f64>,
    pub mean_log10_p: f64,
    pub are: Option<f64>,
    pub smse_literal: Option<f64>,
    pub rel_rmse: Option<f64>,
    pub sd: Option<f64>,
    pub seconds: f64,
}

impl MetricsRow {
    fn fields(&self) -> [Option<f64>; 7] {
        [
            self.target_log10_p,
            Some(self.mean_log10_p),
            self.are,
            self.smse_literal,
            self.rel_rmse,
            self.sd,
            Some(self.seconds),
        ]
    }
}

/// Summarizes replicate estimates given as natural logs.
///
/// The pooled estimate is the linear-space mean, formed in log space. With
/// `truth_ln` set: `ARE = |mean/p - 1|`, `SMSE_literal = sum (p_i - p)^2 / (R p)`
/// and `rel_RMSE = sqrt(mean ((p_i - p)/p)^2)`.
pub fn compute_metrics(ln_estimates: &[f64], truth_ln: Option<f64>, seconds: f64) -> MetricsRow {
    let r = ln_estimates.len();
    let rf = r as f64;
    let mean_ln = log_sum_exp(ln_estimates)
        .map(|s| s - rf.ln())
        .unwrap_or(f64::NAN);
    let sd = if r > 1 && mean_ln.is_finite() {
        let xs: Vec<f64> = ln_estimates.iter().map(|l| (l - mean_ln).exp()).collect();
        let var = xs.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>() / (rf - 1.0);
        Some(var.sqrt() * mean_ln.exp())
    } else {
        None
    };
    let (are, smse, rmse) = match truth_ln {
        Some(t) if t.is_finite() => {
            let are = ((mean_ln - t).exp() - 1.0).abs();
            let msr = ln_estimates
                .iter()
                .map(|l| ((l - t).exp() - 1.0).powi(2))
                .sum::<f64>()
                / rf;
            (Some(are), Some(msr * t.exp()), Some(msr.sqrt()))
        }
        _ => (None, None, None),
    };
    MetricsRow {
        target_log10_p: truth_ln.map(|t| t / LN_10),
        mean_log10_p: mean_ln / LN_10,
        are,
        smse_literal: smse,
        rel_rmse: rmse,
        sd,
        seconds,
    }
}

/// `%g`-style text with `digits` significant digits; non-finite values are
/// `inf`, `-inf` and `nan`.
pub fn fmt_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| fmt_g(x, 12)).unwrap_or_default()
}

pub fn render_csv(rows: &[MetricsRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)
        .map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row.fields().iter().map(|v| cell(*v)))
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn render_json(rows: &[MetricsRow]) -> Result<String, CliError> {
    let arr: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, v) in COLUMNS.iter().zip(row.fields()) {
                let value = match v {
                    None => Value::Null,
                    Some(x) if x.is_finite() => {
                        let rounded: f64 = fmt_g(x, 12).parse().expect("formatted number parses");
                        serde_json::Number::from_f64(rounded)
                            .map(Value::Number)
                            .unwrap_or(Value::Null)
                    }
                    Some(x) => Value::String(fmt_g(x, 12)),
                };
                obj.insert((*name).to_string(), value);
            }
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(arr))
        .map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(
    rows: &[MetricsRow],
    format: Format,
    path: Option<&Path>,
) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Config("nothing to report".into()));
    }
    let text = match format {
        Format::Csv => render_csv(rows)?,
        Format::Json => render_json(rows)?,
    };
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(-100.0, 12), "-100");
        assert_eq!(fmt_g(-99.9999999999, 12), "-99.9999999999");
        assert_eq!(fmt_g(-99.99999999999, 12), "-100");
        assert_eq!(fmt_g(0.0123, 12), "0.0123");
        assert_eq!(fmt_g(1.5e-102, 12), "1.5e-102");
        assert_eq!(fmt_g(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_g(2.0e15, 12), "2e+15");
        assert_eq!(fmt_g(f64::NEG_INFINITY, 12), "-inf");
        assert_eq!(fmt_g(f64::NAN, 12), "nan");
    }

    #[test]
    fn self_truth_has_zero_are() {
        let ln = [(2e-20f64).ln(), (3e-21f64).ln()];
        let row = compute_metrics(&ln, None, 0.0);
        let truth = row.mean_log10_p * LN_10;
        let row = compute_metrics(&ln, Some(truth), 0.0);
        assert!(row.are.unwrap() < 1e-12);
    }

    #[test]
    fn single_replicate_has_no_sd() {
        let row = compute_metrics(&[1e-4f64.ln()], Some(1e-4f64.ln()), 0.0);
        assert!(row.sd.is_none());
        assert!(row.are.unwrap() < 1e-12);
    }

    #[test]
    fn metric_definitions() {
        let p = 1e-6f64;
        let est = [0.9e-6f64, 1.2e-6];
        let row = compute_metrics(&est.map(f64::ln), Some(p.ln()), 0.0);
        assert!((row.are.unwrap() - 0.05).abs() < 1e-12);
        let smse = ((0.1e-6f64).powi(2) + (0.2e-6f64).powi(2)) / (2.0 * p);
        assert!((row.smse_literal.unwrap() - smse).abs() < 1e-12 * smse);
        assert!((row.rel_rmse.unwrap() - (0.025f64).sqrt()).abs() < 1e-12);
        let sd = ((0.15e-6f64).powi(2) * 2.0).sqrt();
        assert!((row.sd.unwrap() - sd).abs() < 1e-12 * sd);
    }

    #[test]
    fn neg_inf_is_literal_string() {
        let row = compute_metrics(&[f64::NEG_INFINITY], None, 0.0);
        let j = render_json(std::slice::from_ref(&row)).unwrap();
        assert!(j.contains("\"-inf\""));
        let c = render_csv(&[row]).unwrap();
        assert_eq!(c.lines().nth(1).unwrap(), ",-inf,,,,,0");
    }

    #[test]
    fn json_keeps_column_order() {
        let row = compute_metrics(&[1e-6f64.ln(), 2e-6f64.ln()], Some(1e-6f64.ln()), 1.5);
        let j = render_json(&[row]).unwrap();
        let pos: Vec<usize> = COLUMNS
            .iter()
            .map(|c| j.find(&format!("\"{c}\"")).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }
}
